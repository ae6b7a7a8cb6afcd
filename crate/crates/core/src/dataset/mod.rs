//! Sensor sample streams: PAMAP2 ingestion, protocol-activity filtering,
//! reference sample counts, and a deterministic synthetic generator.

mod pamap2;
mod reference;
mod synthetic;

use std::collections::BTreeMap;

pub use pamap2::{
    load_pamap2_dir, parse_subject_file, parse_subject_str, read_subject_file,
    subject_file_name, write_subject_file, LoadedDataset, COLUMN_COUNT,
};
pub use reference::{
    compare_with_reference, reference_counts, reference_row_sum, CountMismatch,
    REFERENCE_COUNTS, REFERENCE_RAW_TOTAL,
};
pub use synthetic::{generate_synthetic, ClassProfile, SyntheticSpec, UserShift};

pub type ActivityId = u8;

/// Label for samples recorded between protocol activities.
pub const TRANSIENT: ActivityId = 0;

/// The twelve protocol activities, in canonical (ascending id) order.
pub const PROTOCOL_ACTIVITIES: [ActivityId; 12] = [1, 2, 3, 4, 5, 6, 7, 12, 13, 16, 17, 24];

/// Optional activities recorded by some subjects; dropped by the filter.
pub const OPTIONAL_ACTIVITIES: [ActivityId; 6] = [9, 10, 11, 18, 19, 20];

pub fn is_protocol_activity(id: ActivityId) -> bool {
    PROTOCOL_ACTIVITIES.contains(&id)
}

pub fn is_known_activity(id: ActivityId) -> bool {
    id == TRANSIENT || is_protocol_activity(id) || OPTIONAL_ACTIVITIES.contains(&id)
}

pub fn activity_name(id: ActivityId) -> &'static str {
    match id {
        0 => "transient",
        1 => "lying",
        2 => "sitting",
        3 => "standing",
        4 => "walking",
        5 => "running",
        6 => "cycling",
        7 => "nordic_walking",
        9 => "watching_tv",
        10 => "computer_work",
        11 => "car_driving",
        12 => "ascending_stairs",
        13 => "descending_stairs",
        16 => "vacuum_cleaning",
        17 => "ironing",
        18 => "folding_laundry",
        19 => "house_cleaning",
        20 => "playing_soccer",
        24 => "rope_jumping",
        _ => "unknown",
    }
}

/// Body position of one IMU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Device {
    Hand,
    Chest,
    Ankle,
}

impl Device {
    pub const ALL: [Device; 3] = [Device::Hand, Device::Chest, Device::Ankle];

    pub fn name(self) -> &'static str {
        match self {
            Device::Hand => "hand",
            Device::Chest => "chest",
            Device::Ankle => "ankle",
        }
    }
}

/// Tri-axial sensors that feed the feature extractor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sensor {
    /// The ±16g accelerometer.
    Accel,
    Gyro,
    Mag,
}

impl Sensor {
    pub const ALL: [Sensor; 3] = [Sensor::Accel, Sensor::Gyro, Sensor::Mag];

    pub fn name(self) -> &'static str {
        match self {
            Sensor::Accel => "acc",
            Sensor::Gyro => "gyro",
            Sensor::Mag => "mag",
        }
    }
}

/// Number of scalar signals used downstream: 3 devices x 3 sensors x 3 axes.
pub const SIGNAL_COUNT: usize = 27;

/// Index of a scalar signal in the canonical device-major order.
pub fn signal_index(device: Device, sensor: Sensor, axis: usize) -> usize {
    debug_assert!(axis < 3);
    device as usize * 9 + sensor as usize * 3 + axis
}

/// One IMU's reading. Missing values are stored as NaN.
#[derive(Debug, Clone, Copy)]
pub struct ImuReading {
    /// Degrees Celsius; parsed but not used for features.
    pub temperature: f32,
    /// ±16g accelerometer, m/s².
    pub accel16: [f32; 3],
    /// ±6g accelerometer, m/s²; parsed but not used for features.
    pub accel6: [f32; 3],
    /// rad/s.
    pub gyro: [f32; 3],
    /// µT.
    pub mag: [f32; 3],
}

impl ImuReading {
    pub const MISSING: ImuReading = ImuReading {
        temperature: f32::NAN,
        accel16: [f32::NAN; 3],
        accel6: [f32::NAN; 3],
        gyro: [f32::NAN; 3],
        mag: [f32::NAN; 3],
    };

    pub fn sensor(&self, sensor: Sensor) -> &[f32; 3] {
        match sensor {
            Sensor::Accel => &self.accel16,
            Sensor::Gyro => &self.gyro,
            Sensor::Mag => &self.mag,
        }
    }

    fn fields(&self) -> impl Iterator<Item = f32> + '_ {
        std::iter::once(self.temperature)
            .chain(self.accel16)
            .chain(self.accel6)
            .chain(self.gyro)
            .chain(self.mag)
    }
}

/// One 100 Hz reading from all three IMUs.
///
/// Channel values are `f32` with NaN marking a missing value; use
/// [`RawSample::is_missing`] or the `Option` accessors rather than comparing
/// against NaN directly. Equality is bitwise, so missing equals missing.
#[derive(Debug, Clone, Copy)]
pub struct RawSample {
    pub timestamp: f64,
    pub activity_id: ActivityId,
    pub heart_rate: f32,
    pub imus: [ImuReading; 3],
}

impl RawSample {
    pub fn imu(&self, device: Device) -> &ImuReading {
        &self.imus[device as usize]
    }

    pub fn heart_rate(&self) -> Option<f32> {
        (!self.heart_rate.is_nan()).then_some(self.heart_rate)
    }

    /// Value of signal `index` in [`signal_index`] order, `None` if missing.
    pub fn signal(&self, index: usize) -> Option<f32> {
        let v = self.signal_raw(index);
        (!v.is_nan()).then_some(v)
    }

    pub(crate) fn signal_raw(&self, index: usize) -> f32 {
        let imu = &self.imus[index / 9];
        let within = index % 9;
        let sensor = match within / 3 {
            0 => &imu.accel16,
            1 => &imu.gyro,
            _ => &imu.mag,
        };
        sensor[within % 3]
    }

    pub fn is_missing(value: f32) -> bool {
        value.is_nan()
    }

    fn float_bits(&self) -> impl Iterator<Item = u32> + '_ {
        std::iter::once(self.heart_rate)
            .chain(self.imus.iter().flat_map(|imu| imu.fields()))
            .map(f32::to_bits)
    }
}

impl PartialEq for RawSample {
    fn eq(&self, other: &Self) -> bool {
        self.timestamp.to_bits() == other.timestamp.to_bits()
            && self.activity_id == other.activity_id
            && self.float_bits().eq(other.float_bits())
    }
}

/// Samples of a single user, in timestamp order.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorStream {
    pub user_id: u8,
    pub samples: Vec<RawSample>,
}

impl SensorStream {
    pub fn new(user_id: u8, samples: Vec<RawSample>) -> Self {
        Self { user_id, samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Distinct activity labels present, ascending.
    pub fn activities(&self) -> Vec<ActivityId> {
        let mut seen: Vec<ActivityId> = self.samples.iter().map(|s| s.activity_id).collect();
        seen.sort_unstable();
        seen.dedup();
        seen
    }
}

/// Keeps only samples of the twelve protocol activities, preserving order.
///
/// An empty result is legal (a subject may have performed none of them) and
/// only logged.
pub fn filter_protocol_activities(stream: SensorStream) -> SensorStream {
    let SensorStream { user_id, samples } = stream;
    let samples: Vec<RawSample> = samples
        .into_iter()
        .filter(|s| is_protocol_activity(s.activity_id))
        .collect();
    if samples.is_empty() {
        log::warn!("user {user_id}: no protocol-activity samples after filtering");
    }
    SensorStream { user_id, samples }
}

/// Per-activity sample counts. Every protocol activity has an entry (possibly
/// zero); any other label present in the stream is counted too.
pub fn sample_counts(stream: &SensorStream) -> BTreeMap<ActivityId, usize> {
    let mut counts: BTreeMap<ActivityId, usize> =
        PROTOCOL_ACTIVITIES.iter().map(|&a| (a, 0)).collect();
    for s in &stream.samples {
        *counts.entry(s.activity_id).or_insert(0) += 1;
    }
    counts
}


#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;

    #[test]
    fn filter_drops_transient_and_keeps_order() {
        let stream = labeled_stream(1, &[0, 1, 0, 4]);
        let filtered = filter_protocol_activities(stream);
        let ids: Vec<_> = filtered.samples.iter().map(|s| s.activity_id).collect();
        assert_eq!(ids, vec![1, 4]);
        assert!(filtered
            .samples
            .windows(2)
            .all(|w| w[0].timestamp < w[1].timestamp));
    }

    #[test]
    fn filter_drops_optional_activities() {
        let stream = labeled_stream(3, &[9, 10, 1, 18, 24, 20]);
        let filtered = filter_protocol_activities(stream);
        assert_eq!(filtered.activities(), vec![1, 24]);
    }

    #[test]
    fn filter_to_empty_is_not_an_error() {
        let filtered = filter_protocol_activities(labeled_stream(9, &[0, 0, 0]));
        assert!(filtered.is_empty());
        assert_eq!(filtered.user_id, 9);
    }

    #[test]
    fn counts_of_empty_stream_are_all_zero() {
        let counts = sample_counts(&SensorStream::new(1, vec![]));
        assert_eq!(counts.len(), 12);
        assert!(counts.values().all(|&c| c == 0));
    }

    #[test]
    fn counts_tally_labels() {
        let counts = sample_counts(&labeled_stream(1, &[1, 1, 4, 24, 1]));
        assert_eq!(counts[&1], 3);
        assert_eq!(counts[&4], 1);
        assert_eq!(counts[&24], 1);
        assert_eq!(counts[&2], 0);
    }

    #[test]
    fn signal_index_layout() {
        assert_eq!(signal_index(Device::Hand, Sensor::Accel, 0), 0);
        assert_eq!(signal_index(Device::Hand, Sensor::Mag, 2), 8);
        assert_eq!(signal_index(Device::Chest, Sensor::Gyro, 1), 13);
        assert_eq!(signal_index(Device::Ankle, Sensor::Mag, 2), 26);

        let mut s = constant_sample(0.0, 1, 0.0);
        s.imus[1].gyro[1] = 7.5;
        assert_eq!(s.signal(13), Some(7.5));
        s.imus[2].mag[2] = f32::NAN;
        assert_eq!(s.signal(26), None);
    }

    #[test]
    fn missing_equals_missing() {
        let mut a = constant_sample(0.0, 1, 1.0);
        a.heart_rate = f32::NAN;
        let b = a;
        assert_eq!(a, b);
        assert_eq!(a.heart_rate(), None);
    }
}
