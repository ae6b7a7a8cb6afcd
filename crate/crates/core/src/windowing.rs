//! Fixed-size sliding windows over a sample stream.

use serde::{Deserialize, Serialize};

use crate::dataset::{is_protocol_activity, ActivityId, RawSample, SensorStream};
use crate::error::{Error, Result};

/// Minimum fraction of samples that must share the modal label for a window
/// to be kept.
pub const DEFAULT_PURITY: f64 = 0.8;

/// Window size (in samples) and overlap factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    window_size: usize,
    overlap: f64,
}

impl WindowConfig {
    pub fn new(window_size: usize, overlap: f64) -> Result<Self> {
        if window_size < 2 {
            return Err(Error::InvalidWindow(format!(
                "window size must be >= 2, got {window_size}"
            )));
        }
        if !(overlap.is_finite() && (0.0..1.0).contains(&overlap)) {
            return Err(Error::InvalidWindow(format!(
                "overlap must be in [0, 1), got {overlap}"
            )));
        }
        Ok(Self {
            window_size,
            overlap,
        })
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    /// Samples between consecutive window starts: `W·(1−o)` rounded half up,
    /// never below 1.
    pub fn step(&self) -> usize {
        let exact = self.window_size as f64 * (1.0 - self.overlap);
        // the epsilon absorbs representation error in o (e.g. 1 - 0.3)
        let rounded = (exact + 0.5 + 1e-9).floor() as usize;
        rounded.clamp(1, self.window_size)
    }

    /// Number of windows over a stream of `n` samples.
    pub fn window_count(&self, n: usize) -> usize {
        if n < self.window_size {
            0
        } else {
            (n - self.window_size) / self.step() + 1
        }
    }
}

/// An unlabeled window: a borrowed run of `W` consecutive samples.
#[derive(Debug, Clone, Copy)]
pub struct WindowCandidate<'a> {
    pub user_id: u8,
    /// Position in the segmentation sequence.
    pub index: usize,
    /// Index of the first sample in the stream.
    pub start: usize,
    pub samples: &'a [RawSample],
}

/// A window that survived labeling.
#[derive(Debug, Clone, Copy)]
pub struct SensorWindow<'a> {
    pub user_id: u8,
    pub index: usize,
    pub start: usize,
    pub samples: &'a [RawSample],
    pub label: ActivityId,
    /// Fraction of samples carrying `label`.
    pub purity: f64,
}

/// Lazily yields windows starting at `0, step, 2·step, …`; the last window
/// ends inside the stream.
pub fn segment_iter<'a>(
    stream: &'a SensorStream,
    config: &WindowConfig,
) -> impl Iterator<Item = WindowCandidate<'a>> + 'a {
    let w = config.window_size();
    let step = config.step();
    let count = config.window_count(stream.len());
    let user_id = stream.user_id;
    (0..count).map(move |index| {
        let start = index * step;
        WindowCandidate {
            user_id,
            index,
            start,
            samples: &stream.samples[start..start + w],
        }
    })
}

/// All windows of a stream. A stream shorter than one window yields nothing.
pub fn segment<'a>(stream: &'a SensorStream, config: &WindowConfig) -> Vec<WindowCandidate<'a>> {
    if stream.len() < config.window_size() {
        log::debug!(
            "user {}: stream of {} samples shorter than window {}",
            stream.user_id,
            stream.len(),
            config.window_size()
        );
    }
    segment_iter(stream, config).collect()
}

/// Assigns the modal activity label. Ties go to the label that occurs first in
/// the window. Returns `None` (discarded) when purity is below `min_purity`
/// or the label is not a protocol activity.
pub fn label_window<'a>(candidate: &WindowCandidate<'a>, min_purity: f64) -> Option<SensorWindow<'a>> {
    let mut counts = [0u32; 256];
    let mut first_seen = [usize::MAX; 256];
    for (i, s) in candidate.samples.iter().enumerate() {
        let a = s.activity_id as usize;
        counts[a] += 1;
        if first_seen[a] == usize::MAX {
            first_seen[a] = i;
        }
    }
    let (label, count) = (0..256)
        .filter(|&a| counts[a] > 0)
        .map(|a| (a, counts[a]))
        .max_by(|&(a, ca), &(b, cb)| ca.cmp(&cb).then(first_seen[b].cmp(&first_seen[a])))?;

    let purity = count as f64 / candidate.samples.len() as f64;
    let label = label as ActivityId;
    if purity < min_purity || !is_protocol_activity(label) {
        return None;
    }
    Some(SensorWindow {
        user_id: candidate.user_id,
        index: candidate.index,
        start: candidate.start,
        samples: candidate.samples,
        label,
        purity,
    })
}

/// Windows of `stream` that pass labeling.
pub fn labeled_windows<'a>(
    stream: &'a SensorStream,
    config: &WindowConfig,
    min_purity: f64,
) -> impl Iterator<Item = SensorWindow<'a>> + 'a {
    segment_iter(stream, config).filter_map(move |c| label_window(&c, min_purity))
}

/// Number of classifications a run performs: one per kept window.
pub fn classification_count(stream: &SensorStream, config: &WindowConfig, min_purity: f64) -> usize {
    labeled_windows(stream, config, min_purity).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::testutil::labeled_stream;

    fn cfg(w: usize, o: f64) -> WindowConfig {
        WindowConfig::new(w, o).unwrap()
    }

    #[test]
    fn step_rounding() {
        assert_eq!(cfg(4, 0.5).step(), 2);
        assert_eq!(cfg(512, 0.5).step(), 256);
        assert_eq!(cfg(100, 0.1).step(), 90);
        assert_eq!(cfg(500, 0.8).step(), 100);
        assert_eq!(cfg(5, 0.5).step(), 3);
        assert_eq!(cfg(5, 0.3).step(), 4);
        assert_eq!(cfg(2, 0.9).step(), 1);
        assert_eq!(cfg(1000, 0.7).step(), 300);
        assert_eq!(cfg(100, 0.0).step(), 100);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(WindowConfig::new(1, 0.0).is_err());
        assert!(WindowConfig::new(10, 1.0).is_err());
        assert!(WindowConfig::new(10, -0.1).is_err());
        assert!(WindowConfig::new(10, f64::NAN).is_err());
    }

    #[test]
    fn eight_samples_window_four_half_overlap() {
        let stream = labeled_stream(1, &[1; 8]);
        let starts: Vec<usize> = segment(&stream, &cfg(4, 0.5)).iter().map(|w| w.start).collect();
        assert_eq!(starts, vec![0, 2, 4]);
    }

    #[test]
    fn short_stream_yields_nothing() {
        let stream = labeled_stream(1, &[1; 3]);
        assert!(segment(&stream, &cfg(4, 0.0)).is_empty());
        assert_eq!(cfg(4, 0.0).window_count(3), 0);
    }

    #[test]
    fn pure_window() {
        let stream = labeled_stream(1, &[4; 10]);
        let c = segment(&stream, &cfg(10, 0.0))[0];
        let w = label_window(&c, DEFAULT_PURITY).unwrap();
        assert_eq!(w.label, 4);
        assert_eq!(w.purity, 1.0);
    }

    #[test]
    fn impure_window_discarded() {
        let mut labels = vec![4u8; 79];
        labels.extend([3u8; 21]);
        let stream = labeled_stream(1, &labels);
        let c = segment(&stream, &cfg(100, 0.0))[0];
        assert!(label_window(&c, DEFAULT_PURITY).is_none());

        let mut labels = vec![4u8; 80];
        labels.extend([3u8; 20]);
        let stream = labeled_stream(1, &labels);
        let c = segment(&stream, &cfg(100, 0.0))[0];
        assert_eq!(label_window(&c, DEFAULT_PURITY).unwrap().purity, 0.8);
    }

    #[test]
    fn tie_goes_to_earlier_label() {
        let stream = labeled_stream(1, &[4, 4, 3, 3]);
        let c = segment(&stream, &cfg(4, 0.0))[0];
        assert!(label_window(&c, DEFAULT_PURITY).is_none());
        let w = label_window(&c, 0.5).unwrap();
        assert_eq!(w.label, 4);

        let stream = labeled_stream(1, &[3, 4, 4, 3]);
        let c = segment(&stream, &cfg(4, 0.0))[0];
        assert_eq!(label_window(&c, 0.5).unwrap().label, 3);
    }

    #[test]
    fn transient_label_never_kept() {
        let stream = labeled_stream(1, &[0; 6]);
        let c = segment(&stream, &cfg(6, 0.0))[0];
        assert!(label_window(&c, 0.5).is_none());
    }

    #[test]
    fn single_activity_counts() {
        let stream = labeled_stream(1, &vec![2u8; 10_000]);
        assert_eq!(classification_count(&stream, &cfg(100, 0.0), DEFAULT_PURITY), 100);
        let mut last = 0;
        for t in 0..10 {
            let n = classification_count(&stream, &cfg(100, t as f64 / 10.0), DEFAULT_PURITY);
            assert!(n >= last);
            last = n;
        }
    }
}
