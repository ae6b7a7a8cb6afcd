//! Deterministic synthetic sensor streams for running the pipeline without
//! the real dataset.
//!
//! Spec files are TOML:
//!
//! ```toml
//! seed = 42
//! users = 4                 # user ids 1..=users
//! class_count = 4           # labels are the first N protocol activities
//! samples_per_class = 2000  # per user
//! segment_length = 500      # contiguous run length before switching class
//! noise_sigma = 0.3         # Gaussian noise per sample
//! user_offset_sigma = 0.2   # per-user, per-signal random offset
//! channel_spread = 2.0      # per-class, per-signal jitter of the class mean
//! sample_rate_hz = 100.0
//!
//! [[classes]]               # optional; one entry per class
//! mean = 0.0
//! frequency_hz = 0.5
//! amplitude = 1.0
//!
//! [[user_shifts]]           # optional; added to every signal of one user
//! user = 4
//! shift = 1.5
//! ```

use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{ImuReading, RawSample, SensorStream, PROTOCOL_ACTIVITIES, SIGNAL_COUNT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassProfile {
    pub mean: f64,
    pub frequency_hz: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserShift {
    pub user: u8,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub seed: u64,
    #[serde(default = "default_users")]
    pub users: u8,
    pub class_count: usize,
    pub samples_per_class: usize,
    /// 0 means one segment per class.
    #[serde(default)]
    pub segment_length: usize,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub user_offset_sigma: f64,
    #[serde(default)]
    pub channel_spread: f64,
    #[serde(default = "default_rate")]
    pub sample_rate_hz: f64,
    #[serde(default)]
    pub classes: Vec<ClassProfile>,
    #[serde(default)]
    pub user_shifts: Vec<UserShift>,
}

fn default_users() -> u8 {
    3
}

fn default_rate() -> f64 {
    100.0
}

impl SyntheticSpec {
    pub fn new(seed: u64, users: u8, class_count: usize, samples_per_class: usize) -> Self {
        Self {
            seed,
            users,
            class_count,
            samples_per_class,
            segment_length: 0,
            noise_sigma: 0.0,
            user_offset_sigma: 0.0,
            channel_spread: 0.0,
            sample_rate_hz: default_rate(),
            classes: Vec::new(),
            user_shifts: Vec::new(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidSynthetic(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::format(path, e))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("synthetic spec serializes")
    }

    /// Class profile table, filling in defaults when none are configured.
    pub fn class_profiles(&self) -> Vec<ClassProfile> {
        if !self.classes.is_empty() {
            return self.classes.clone();
        }
        (0..self.class_count)
            .map(|c| ClassProfile {
                mean: 4.0 * c as f64,
                frequency_hz: 0.5 * (c + 1) as f64,
                amplitude: 1.0,
            })
            .collect()
    }

    pub fn total_samples(&self) -> usize {
        self.users as usize * self.class_count * self.samples_per_class
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidSynthetic(msg));
        if self.class_count < 2 {
            return fail(format!("class_count must be >= 2, got {}", self.class_count));
        }
        if self.class_count > PROTOCOL_ACTIVITIES.len() {
            return fail(format!(
                "class_count must be <= {}, got {}",
                PROTOCOL_ACTIVITIES.len(),
                self.class_count
            ));
        }
        if self.users == 0 || self.users > 99 {
            return fail(format!("users must be in 1..=99, got {}", self.users));
        }
        if self.samples_per_class == 0 {
            return fail("samples_per_class must be positive".into());
        }
        if !self.classes.is_empty() && self.classes.len() != self.class_count {
            return fail(format!(
                "{} class profiles given for class_count {}",
                self.classes.len(),
                self.class_count
            ));
        }
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !finite_nonneg(self.noise_sigma)
            || !finite_nonneg(self.user_offset_sigma)
            || !finite_nonneg(self.channel_spread)
        {
            return fail("noise_sigma, user_offset_sigma and channel_spread must be finite and >= 0".into());
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return fail("sample_rate_hz must be positive".into());
        }
        Ok(())
    }
}

/// Generates one stream per user.
///
/// Each signal of class `c` is a sinusoid at the class frequency around a
/// per-(class, signal) mean, plus a per-(user, signal) offset and Gaussian
/// noise. Classes take turns in runs of `segment_length` samples.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<SensorStream>> {
    spec.validate()?;
    let profiles = spec.class_profiles();

    let mut table_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let class_means: Vec<[f64; SIGNAL_COUNT]> = profiles
        .iter()
        .map(|p| {
            std::array::from_fn(|_| p.mean + spec.channel_spread * table_rng.random_range(-1.0..=1.0))
        })
        .collect();
    let phases: [f64; SIGNAL_COUNT] = std::array::from_fn(|_| table_rng.random_range(0.0..TAU));

    let segment = if spec.segment_length == 0 {
        spec.samples_per_class
    } else {
        spec.segment_length
    };
    let mut schedule: Vec<(usize, usize)> = Vec::new();
    let mut remaining = vec![spec.samples_per_class; spec.class_count];
    while remaining.iter().any(|&r| r > 0) {
        for (class, left) in remaining.iter_mut().enumerate() {
            let run = (*left).min(segment);
            if run > 0 {
                schedule.push((class, run));
                *left -= run;
            }
        }
    }

    let noise = (spec.noise_sigma > 0.0)
        .then(|| Normal::new(0.0, spec.noise_sigma).expect("sigma validated"));
    let offset_dist = (spec.user_offset_sigma > 0.0)
        .then(|| Normal::new(0.0, spec.user_offset_sigma).expect("sigma validated"));

    let mut streams = Vec::with_capacity(spec.users as usize);
    for user in 1..=spec.users {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(user as u64);
        let shift: f64 = spec
            .user_shifts
            .iter()
            .filter(|s| s.user == user)
            .map(|s| s.shift)
            .sum();
        let offsets: [f64; SIGNAL_COUNT] = std::array::from_fn(|_| {
            shift + offset_dist.as_ref().map_or(0.0, |d| d.sample(&mut rng))
        });

        let mut samples = Vec::with_capacity(spec.class_count * spec.samples_per_class);
        for &(class, run) in &schedule {
            let profile = &profiles[class];
            for _ in 0..run {
                let t = samples.len() as f64 / spec.sample_rate_hz;
                let mut signals = [0f32; SIGNAL_COUNT];
                for (ch, out) in signals.iter_mut().enumerate() {
                    let wave = profile.amplitude * (TAU * profile.frequency_hz * t + phases[ch]).sin();
                    let eps = noise.as_ref().map_or(0.0, |d| d.sample(&mut rng));
                    *out = (class_means[class][ch] + offsets[ch] + wave + eps) as f32;
                }
                samples.push(assemble(t, PROTOCOL_ACTIVITIES[class], &signals));
            }
        }
        streams.push(SensorStream::new(user, samples));
    }
    Ok(streams)
}

fn assemble(timestamp: f64, activity_id: u8, signals: &[f32; SIGNAL_COUNT]) -> RawSample {
    let imus = std::array::from_fn(|d| {
        let s = &signals[d * 9..d * 9 + 9];
        let accel = [s[0], s[1], s[2]];
        ImuReading {
            temperature: 33.0,
            accel16: accel,
            accel6: accel,
            gyro: [s[3], s[4], s[5]],
            mag: [s[6], s[7], s[8]],
        }
    });
    RawSample {
        timestamp,
        activity_id,
        heart_rate: 80.0,
        imus,
    }
}
