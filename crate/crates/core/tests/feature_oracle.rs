mod common;

use harsweep::dataset::{RawSample, SensorStream};
use harsweep::features::{extract, extract_stream, FEATURE_COUNT};
use harsweep::windowing::{label_window, segment, WindowConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn features_of(samples: Vec<RawSample>) -> harsweep::FeatureVector {
    let w = samples.len();
    let stream = SensorStream::new(1, samples);
    let cfg = WindowConfig::new(w, 0.0).unwrap();
    let cand = &segment(&stream, &cfg)[0];
    extract(&label_window(cand, 0.8).unwrap())
}

#[test]
fn matches_two_pass_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let w = rng.random_range(2..400);
        let samples = common::random_samples(&mut rng, w, 4);
        let oracle = common::naive_features(&samples);
        let fv = features_of(samples);
        assert_eq!(fv.values.len(), FEATURE_COUNT);
        for (a, b) in fv.values.iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst < 1e-9, "max abs diff {worst}");
}

#[test]
fn constant_signal_has_zero_spread_and_correlation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut samples = common::random_samples(&mut rng, 50, 1);
    for s in &mut samples {
        s.imus[1].gyro = [7.5, 7.5, -1.0];
    }
    let fv = features_of(samples);
    // chest gyro: signals 12..15
    assert_eq!(fv.values[2 * 12 + 1], 0.0);
    assert_eq!(fv.values[2 * 12], 7.5);
    let chest_gyro_corr = 54 + 4 * 3;
    assert_eq!(&fv.values[chest_gyro_corr..chest_gyro_corr + 3], &[0.0, 0.0, 0.0]);
}

#[test]
fn missing_samples_are_interpolated() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut samples = common::random_samples(&mut rng, 10, 1);
    for (i, s) in samples.iter_mut().enumerate() {
        s.imus[0].accel16[0] = i as f32;
    }
    samples[4].imus[0].accel16[0] = f32::NAN;
    samples[5].imus[0].accel16[0] = f32::NAN;
    let fv = features_of(samples);
    assert!(fv.interpolated);
    assert!(!fv.is_degraded());
    assert!((fv.values[0] - 4.5).abs() < 1e-12);
}

#[test]
fn fully_missing_signal_is_zeroed_and_flagged() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut samples = common::random_samples(&mut rng, 20, 1);
    for s in &mut samples {
        s.imus[2].mag = [f32::NAN; 3];
    }
    let fv = features_of(samples);
    assert!(fv.is_degraded());
    assert_eq!(fv.missing_signals, 3);
    for ch in 24..27 {
        assert_eq!(fv.values[2 * ch], 0.0);
        assert_eq!(fv.values[2 * ch + 1], 0.0);
    }
    assert!(fv.values.iter().all(|v| v.is_finite()));
}

#[test]
fn stream_extraction_preserves_order_and_labels() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut samples = common::random_samples(&mut rng, 100, 1);
    samples.extend(common::random_samples(&mut rng, 100, 2));
    for (i, s) in samples.iter_mut().enumerate() {
        s.timestamp = i as f64 * 0.01;
    }
    let stream = SensorStream::new(6, samples);
    let fvs = extract_stream(&stream, &WindowConfig::new(50, 0.5).unwrap(), 0.8);
    let labels: Vec<u8> = fvs.iter().map(|f| f.label).collect();
    // the window straddling the boundary is only half pure
    assert_eq!(labels, vec![1, 1, 1, 2, 2, 2]);
    assert!(fvs.windows(2).all(|p| p[0].window_index < p[1].window_index));
    assert!(fvs.iter().all(|f| f.user_id == 6));
}
