//! Time-domain features: per-signal mean and standard deviation plus
//! between-axis Pearson correlation for every tri-axial sensor.
//!
//! Layout of the 81 values:
//! * `0..54`: for each of the 27 signals (device-major, then sensor, then
//!   axis) its mean followed by its standard deviation;
//! * `54..81`: for each of the 9 tri-axial sensors the correlations of
//!   (x, y), (x, z) and (y, z).

use std::io::Write;

use crate::dataset::{ActivityId, Device, Sensor, SensorStream, SIGNAL_COUNT};
use crate::error::{Error, Result};
use crate::windowing::{labeled_windows, SensorWindow, WindowConfig};

pub const FEATURE_COUNT: usize = 81;
const CORRELATION_OFFSET: usize = 2 * SIGNAL_COUNT;
const AXIS_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
const AXES: [&str; 3] = ["x", "y", "z"];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: ActivityId,
    pub user_id: u8,
    pub window_index: usize,
    /// Signals with no valid sample in the window; their features are zero.
    pub missing_signals: u8,
    /// Whether any sample had to be interpolated.
    pub interpolated: bool,
}

impl FeatureVector {
    /// Set when at least one signal was entirely missing.
    pub fn is_degraded(&self) -> bool {
        self.missing_signals > 0
    }
}

/// Canonical feature names, in vector order.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_COUNT);
    for device in Device::ALL {
        for sensor in Sensor::ALL {
            for axis in AXES {
                let base = format!("{}_{}_{}", device.name(), sensor.name(), axis);
                names.push(format!("{base}_mean"));
                names.push(format!("{base}_std"));
            }
        }
    }
    for device in Device::ALL {
        for sensor in Sensor::ALL {
            for (a, b) in AXIS_PAIRS {
                names.push(format!(
                    "{}_{}_corr_{}{}",
                    device.name(),
                    sensor.name(),
                    AXES[a],
                    AXES[b]
                ));
            }
        }
    }
    names
}

/// Mean and population standard deviation, single pass (Welford).
pub fn signal_stats(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 values for statistics, got {}",
            values.len()
        )));
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in values.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let var = (m2 / values.len() as f64).max(0.0);
    Ok((mean, var.sqrt()))
}

/// Pearson correlation, single pass. Zero when either input has zero
/// variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 values for correlation, got {}",
            a.len()
        )));
    }
    let (mut mean_a, mut mean_b) = (0.0, 0.0);
    let (mut m2_a, mut m2_b, mut co) = (0.0, 0.0, 0.0);
    for (i, (&x, &y)) in a.iter().zip(b).enumerate() {
        let n = (i + 1) as f64;
        let dx = x - mean_a;
        let dy = y - mean_b;
        mean_a += dx / n;
        mean_b += dy / n;
        m2_a += dx * (x - mean_a);
        m2_b += dy * (y - mean_b);
        co += dx * (y - mean_b);
    }
    if m2_a <= 0.0 || m2_b <= 0.0 {
        return Ok(0.0);
    }
    let r = co / (m2_a.sqrt() * m2_b.sqrt());
    Ok(if r.is_finite() { r.clamp(-1.0, 1.0) } else { 0.0 })
}

/// Replaces NaN entries by linear interpolation between the nearest valid
/// neighbours; leading and trailing gaps copy the nearest valid value.
/// Returns `(any_valid, any_filled)`.
pub(crate) fn interpolate_missing(values: &mut [f64]) -> (bool, bool) {
    let valid: Vec<usize> = (0..values.len()).filter(|&i| !values[i].is_nan()).collect();
    let (Some(&first), Some(&last)) = (valid.first(), valid.last()) else {
        return (false, false);
    };
    if valid.len() == values.len() {
        return (true, false);
    }
    let head = values[first];
    values[..first].fill(head);
    let tail = values[last];
    values[last + 1..].fill(tail);
    for pair in valid.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi - lo > 1 {
            let (y0, y1) = (values[lo], values[hi]);
            let span = (hi - lo) as f64;
            for i in lo + 1..hi {
                values[i] = y0 + (y1 - y0) * (i - lo) as f64 / span;
            }
        }
    }
    (true, true)
}

/// Computes the 81-value feature vector of a labeled window.
pub fn extract(window: &SensorWindow<'_>) -> FeatureVector {
    let w = window.samples.len();
    let mut signals: Vec<Vec<f64>> = (0..SIGNAL_COUNT)
        .map(|ch| window.samples.iter().map(|s| s.signal_raw(ch) as f64).collect())
        .collect();

    let mut present = [false; SIGNAL_COUNT];
    let mut interpolated = false;
    for (ch, signal) in signals.iter_mut().enumerate() {
        let (any_valid, filled) = interpolate_missing(signal);
        present[ch] = any_valid;
        interpolated |= filled;
    }

    let mut values = vec![0.0; FEATURE_COUNT];
    if w >= 2 {
        for ch in 0..SIGNAL_COUNT {
            if present[ch] {
                let (mean, std) = signal_stats(&signals[ch]).expect("window has >= 2 samples");
                values[2 * ch] = mean;
                values[2 * ch + 1] = std;
            }
        }
        for group in 0..SIGNAL_COUNT / 3 {
            for (k, (a, b)) in AXIS_PAIRS.into_iter().enumerate() {
                let (ca, cb) = (group * 3 + a, group * 3 + b);
                if present[ca] && present[cb] {
                    values[CORRELATION_OFFSET + group * 3 + k] =
                        pearson(&signals[ca], &signals[cb]).expect("equal lengths");
                }
            }
        }
    }

    FeatureVector {
        values,
        label: window.label,
        user_id: window.user_id,
        window_index: window.index,
        missing_signals: present.iter().filter(|&&p| !p).count() as u8,
        interpolated,
    }
}

/// Feature vectors of every kept window of `stream`, in stream order.
pub fn extract_stream(stream: &SensorStream, config: &WindowConfig, min_purity: f64) -> Vec<FeatureVector> {
    labeled_windows(stream, config, min_purity)
        .map(|w| extract(&w))
        .collect()
}

/// Writes feature vectors as CSV: `user,window,label,degraded` followed by the
/// canonical feature names.
pub fn write_features_csv<W: Write>(out: W, vectors: &[FeatureVector]) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["user".to_string(), "window".into(), "label".into(), "degraded".into()];
    header.extend(feature_names());
    writer.write_record(&header)?;
    for fv in vectors {
        let mut row = vec![
            fv.user_id.to_string(),
            fv.window_index.to_string(),
            fv.label.to_string(),
            (fv.is_degraded() as u8).to_string(),
        ];
        row.extend(fv.values.iter().map(|v| v.to_string()));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
