//! Brute-force reference implementations shared by the integration tests and
//! the acceptance suite.

#![allow(dead_code)]

use harsweep::dataset::{ImuReading, RawSample, SensorStream};
use rand::Rng;

/// Window start offsets by integer arithmetic; `tenths` is the overlap in
/// tenths.
pub fn window_starts(n: usize, window: usize, tenths: usize) -> Vec<usize> {
    let step = ((window * (10 - tenths) + 5) / 10).clamp(1, window);
    let mut starts = Vec::new();
    let mut s = 0;
    while s + window <= n {
        starts.push(s);
        s += step;
    }
    starts
}

fn device_signals(imu: &ImuReading) -> [f32; 9] {
    [
        imu.accel16[0],
        imu.accel16[1],
        imu.accel16[2],
        imu.gyro[0],
        imu.gyro[1],
        imu.gyro[2],
        imu.mag[0],
        imu.mag[1],
        imu.mag[2],
    ]
}

/// The 27 motion signals of a window, hand then chest then ankle.
pub fn signals(samples: &[RawSample]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(samples.len()); 27];
    for s in samples {
        for (d, imu) in s.imus.iter().enumerate() {
            for (k, v) in device_signals(imu).into_iter().enumerate() {
                out[d * 9 + k].push(v as f64);
            }
        }
    }
    out
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Two-pass population standard deviation.
pub fn std_two_pass(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Two-pass Pearson correlation, zero for a constant input.
pub fn pearson_two_pass(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va.sqrt() * vb.sqrt())
    }
}

/// The 81 features of a window without missing values, feature by feature.
pub fn naive_features(samples: &[RawSample]) -> Vec<f64> {
    let sig = signals(samples);
    let mut out = Vec::with_capacity(81);
    for s in &sig {
        out.push(mean(s));
        out.push(std_two_pass(s));
    }
    for sensor in 0..9 {
        let base = sensor * 3;
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            out.push(pearson_two_pass(&sig[base + a], &sig[base + b]));
        }
    }
    out
}

pub fn random_imu<R: Rng>(rng: &mut R, scale: f32, offset: f32) -> ImuReading {
    let mut v = || offset + rng.random_range(-scale..scale);
    ImuReading {
        temperature: 32.0,
        accel16: [v(), v(), v()],
        accel6: [v(), v(), v()],
        gyro: [v(), v(), v()],
        mag: [v(), v(), v()],
    }
}

pub fn random_samples<R: Rng>(rng: &mut R, n: usize, activity: u8) -> Vec<RawSample> {
    let scale = rng.random_range(0.1f32..50.0);
    let offset = rng.random_range(-100.0f32..100.0);
    (0..n)
        .map(|i| RawSample {
            timestamp: i as f64 * 0.01,
            activity_id: activity,
            heart_rate: f32::NAN,
            imus: [
                random_imu(rng, scale, offset),
                random_imu(rng, scale, -offset),
                random_imu(rng, scale * 0.5, offset * 0.5),
            ],
        })
        .collect()
}

pub fn labeled_stream(user_id: u8, labels: &[u8]) -> SensorStream {
    let samples = labels
        .iter()
        .enumerate()
        .map(|(i, &a)| RawSample {
            timestamp: i as f64 * 0.01,
            activity_id: a,
            heart_rate: 80.0,
            imus: [ImuReading::MISSING; 3],
        })
        .collect();
    SensorStream::new(user_id, samples)
}

/// Per-class `(count, [(mean, population variance)])` by two-pass batch fit.
pub fn batch_gaussian_fit(data: &[(Vec<f64>, usize)], class: usize) -> (usize, Vec<(f64, f64)>) {
    let rows: Vec<&Vec<f64>> = data.iter().filter(|(_, c)| *c == class).map(|(x, _)| x).collect();
    if rows.is_empty() {
        return (0, Vec::new());
    }
    let dims = rows[0].len();
    let moments = (0..dims)
        .map(|d| {
            let col: Vec<f64> = rows.iter().map(|r| r[d]).collect();
            let m = mean(&col);
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / col.len() as f64;
            (m, var)
        })
        .collect();
    (rows.len(), moments)
}

/// Majority class of the `k` nearest stored instances under z-scored
/// Euclidean distance, scales taken over `history` (every instance ever
/// trained). Distance ties keep insertion order; vote ties go to the lowest
/// class index.
pub fn brute_force_knn(
    history: &[(Vec<f64>, usize)],
    stored: &[(Vec<f64>, usize)],
    query: &[f64],
    k: usize,
    num_classes: usize,
) -> usize {
    let dims = query.len();
    let scales: Vec<f64> = (0..dims)
        .map(|d| std_two_pass(&history.iter().map(|(x, _)| x[d]).collect::<Vec<_>>()))
        .collect();
    let mut ranked: Vec<(f64, usize, usize)> = stored
        .iter()
        .enumerate()
        .map(|(pos, (x, c))| {
            let d: f64 = (0..dims)
                .map(|i| {
                    let z = if scales[i] > 1e-12 { (x[i] - query[i]) / scales[i] } else { 0.0 };
                    z * z
                })
                .sum();
            (d, pos, *c)
        })
        .collect();
    ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut votes = vec![0usize; num_classes];
    for &(_, _, c) in ranked.iter().take(k) {
        votes[c] += 1;
    }
    let best = *votes.iter().max().unwrap();
    votes.iter().position(|&v| v == best).unwrap()
}
