//! Phase timing and energy estimation for a single-user online run.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::dataset::{RawSample, SensorStream};
use crate::ensemble::{AuditRecord, EnsembleModel, OnlineMode};
use crate::error::{Error, Result};
use crate::evaluation::format_overlap;
use crate::features::extract;
use crate::windowing::{label_window, segment_iter, WindowCandidate, WindowConfig};

pub const MIN_REPETITIONS: usize = 5;

/// Nanoseconds spent in each phase of one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingBreakdown {
    /// Copying window samples into the buffer and labeling them.
    pub sampling_ns: u64,
    pub feature_ns: u64,
    /// Classification plus any self-update.
    pub classification_ns: u64,
    pub wall_ns: u64,
    pub n_windows: usize,
    pub window_size: usize,
    pub overlap: f64,
    /// Run start, seconds since the Unix epoch.
    pub started_at: f64,
}

impl TimingBreakdown {
    pub fn phase_total_ns(&self) -> u64 {
        self.sampling_ns + self.feature_ns + self.classification_ns
    }

    pub fn seconds(ns: u64) -> f64 {
        ns as f64 * 1e-9
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpread {
    pub sampling: f64,
    pub feature: f64,
    pub classification: f64,
    pub wall: f64,
}

#[derive(Debug, Clone)]
pub struct ProfileResult {
    pub repetitions: Vec<TimingBreakdown>,
    /// Per-phase medians across repetitions.
    pub median: TimingBreakdown,
    /// Per-phase population variance across repetitions, in ns².
    pub variance: PhaseSpread,
    /// Audit log of the first repetition.
    pub records: Vec<AuditRecord>,
    pub warnings: Vec<String>,
}

impl ProfileResult {
    pub fn accuracy(&self) -> Option<f64> {
        (!self.records.is_empty())
            .then(|| self.records.iter().filter(|r| r.is_correct()).count() as f64 / self.records.len() as f64)
    }
}

/// Smallest nonzero difference between consecutive clock reads.
pub fn timer_resolution() -> Duration {
    let mut best = Duration::MAX;
    for _ in 0..200 {
        let a = Instant::now();
        let mut b = Instant::now();
        while b == a {
            b = Instant::now();
        }
        best = best.min(b - a);
    }
    best
}

fn median_u64(values: &mut [u64]) -> u64 {
    values.sort_unstable();
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2
    }
}

fn variance(values: &[u64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n
}

fn run_once(
    model: EnsembleModel,
    stream: &SensorStream,
    config: &WindowConfig,
    mode: OnlineMode,
    purity: f64,
    buffer: &mut Vec<RawSample>,
) -> Result<(TimingBreakdown, Vec<AuditRecord>)> {
    let mut model = model;
    let mut t = TimingBreakdown {
        window_size: config.window_size(),
        overlap: config.overlap(),
        started_at: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0.0, |d| d.as_secs_f64()),
        ..Default::default()
    };
    let mut records = Vec::new();
    let wall = Instant::now();
    for candidate in segment_iter(stream, config) {
        let s = Instant::now();
        buffer.clear();
        buffer.extend_from_slice(candidate.samples);
        let window = label_window(
            &WindowCandidate {
                samples: buffer.as_slice(),
                ..candidate
            },
            purity,
        );
        t.sampling_ns += s.elapsed().as_nanos() as u64;
        let Some(window) = window else { continue };

        let f = Instant::now();
        let fv = extract(&window);
        t.feature_ns += f.elapsed().as_nanos() as u64;

        let c = Instant::now();
        let prediction = model.classify(&fv.values)?;
        let applied = mode == OnlineMode::SemiSupervised && model.self_update(&fv.values, &prediction);
        t.classification_ns += c.elapsed().as_nanos() as u64;

        t.n_windows += 1;
        records.push(AuditRecord {
            window_index: fv.window_index,
            true_label: fv.label,
            predicted_label: prediction.label,
            confidence: prediction.confidence,
            applied,
        });
    }
    t.wall_ns = wall.elapsed().as_nanos() as u64;
    Ok((t, records))
}

/// Streams one user through a fresh clone of `model` `repetitions` times on
/// the calling thread, timing each phase.
pub fn timed_run(
    model: &EnsembleModel,
    stream: &SensorStream,
    config: &WindowConfig,
    mode: OnlineMode,
    purity: f64,
    repetitions: usize,
) -> Result<ProfileResult> {
    if repetitions < MIN_REPETITIONS {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_REPETITIONS} repetitions required, got {repetitions}"
        )));
    }
    let mut warnings = Vec::new();
    let resolution = timer_resolution();
    if resolution > Duration::from_micros(1) {
        let msg = format!("timer resolution {resolution:?} is coarser than 1us");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let mut buffer = Vec::with_capacity(config.window_size());
    let mut reps = Vec::with_capacity(repetitions);
    let mut first_records = None;
    for _ in 0..repetitions {
        let (t, records) = run_once(model.clone(), stream, config, mode, purity, &mut buffer)?;
        first_records.get_or_insert(records);
        reps.push(t);
    }
    let column = |f: fn(&TimingBreakdown) -> u64| reps.iter().map(f).collect::<Vec<u64>>();
    let (mut s, mut fe, mut c, mut w) = (
        column(|t| t.sampling_ns),
        column(|t| t.feature_ns),
        column(|t| t.classification_ns),
        column(|t| t.wall_ns),
    );
    let spread = PhaseSpread {
        sampling: variance(&s),
        feature: variance(&fe),
        classification: variance(&c),
        wall: variance(&w),
    };
    let median = TimingBreakdown {
        sampling_ns: median_u64(&mut s),
        feature_ns: median_u64(&mut fe),
        classification_ns: median_u64(&mut c),
        wall_ns: median_u64(&mut w),
        ..reps[0]
    };
    Ok(ProfileResult {
        repetitions: reps,
        median,
        variance: spread,
        records: first_records.unwrap_or_default(),
        warnings,
    })
}

/// Constant power draw per phase, in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerModel {
    pub sampling_watts: f64,
    pub feature_watts: f64,
    pub classification_watts: f64,
    /// Drawn during wall time not attributed to any phase.
    pub idle_watts: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            sampling_watts: 1.0,
            feature_watts: 1.0,
            classification_watts: 1.0,
            idle_watts: 0.0,
        }
    }
}

impl PowerModel {
    pub fn from_toml(text: &str) -> Result<Self> {
        let model: Self = toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("power model: {e}")))?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.sampling_watts, self.feature_watts, self.classification_watts, self.idle_watts];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument("power draws must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Joules for one run.
    pub fn energy(&self, t: &TimingBreakdown) -> f64 {
        let idle_ns = t.wall_ns.saturating_sub(t.phase_total_ns());
        self.sampling_watts * TimingBreakdown::seconds(t.sampling_ns)
            + self.feature_watts * TimingBreakdown::seconds(t.feature_ns)
            + self.classification_watts * TimingBreakdown::seconds(t.classification_ns)
            + self.idle_watts * TimingBreakdown::seconds(idle_ns)
    }
}

/// Measured power trace: `timestamp_seconds,watts`, timestamps increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLog {
    samples: Vec<(f64, f64)>,
}

#[derive(Deserialize)]
struct PowerRow {
    timestamp_seconds: f64,
    watts: f64,
}

impl PowerLog {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument("power log needs at least two samples".into()));
        }
        if samples.windows(2).any(|p| p[1].0 <= p[0].0) {
            return Err(Error::InvalidArgument("power log timestamps must increase".into()));
        }
        if samples.iter().any(|&(t, w)| !t.is_finite() || !w.is_finite() || w < 0.0) {
            return Err(Error::InvalidArgument("power log has invalid readings".into()));
        }
        Ok(Self { samples })
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut samples = Vec::new();
        for row in csv::Reader::from_reader(input).deserialize::<PowerRow>() {
            let row = row.map_err(|e| Error::InvalidArgument(format!("power log: {e}")))?;
            samples.push((row.timestamp_seconds, row.watts));
        }
        Self::new(samples)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn start(&self) -> f64 {
        self.samples[0].0
    }

    pub fn end(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    fn watts_at(&self, t: f64) -> f64 {
        let i = self.samples.partition_point(|&(ts, _)| ts <= t).clamp(1, self.samples.len() - 1);
        let (t0, w0) = self.samples[i - 1];
        let (t1, w1) = self.samples[i];
        w0 + (w1 - w0) * (t - t0) / (t1 - t0)
    }

    /// Trapezoidal integral of power over `[from, to]`, in joules.
    pub fn integrate(&self, from: f64, to: f64) -> Result<f64> {
        if from < self.start() || to > self.end() || to < from {
            return Err(Error::PowerLogCoverage {
                log_start: self.start(),
                log_end: self.end(),
                run_start: from,
                run_end: to,
            });
        }
        let mut points = vec![(from, self.watts_at(from))];
        points.extend(self.samples.iter().copied().filter(|&(t, _)| t > from && t < to));
        points.push((to, self.watts_at(to)));
        Ok(points
            .windows(2)
            .map(|p| 0.5 * (p[0].1 + p[1].1) * (p[1].0 - p[0].0))
            .sum())
    }
}

#[derive(Debug, Clone)]
pub enum EnergySource {
    Model(PowerModel),
    Log(PowerLog),
}

impl Default for EnergySource {
    fn default() -> Self {
        Self::Model(PowerModel::default())
    }
}

/// Joules consumed by one timed run.
pub fn estimate_energy(t: &TimingBreakdown, source: &EnergySource) -> Result<f64> {
    match source {
        EnergySource::Model(m) => Ok(m.energy(t)),
        EnergySource::Log(log) => log.integrate(t.started_at, t.started_at + TimingBreakdown::seconds(t.wall_ns)),
    }
}

/// Median energy over the repetitions of a profile.
pub fn median_energy(profile: &ProfileResult, source: &EnergySource) -> Result<f64> {
    let mut e = profile
        .repetitions
        .iter()
        .map(|t| estimate_energy(t, source))
        .collect::<Result<Vec<f64>>>()?;
    e.sort_by(f64::total_cmp);
    let n = e.len();
    Ok(if n % 2 == 1 { e[n / 2] } else { 0.5 * (e[n / 2 - 1] + e[n / 2]) })
}

/// One row of a profiling sweep.
#[derive(Debug, Clone)]
pub struct ProfileCell {
    pub timing: TimingBreakdown,
    pub variance: PhaseSpread,
    pub joules: f64,
    pub accuracy: Option<f64>,
}

/// Per-configuration timing with variances, one row per cell.
pub fn write_timing_csv<W: std::io::Write>(out: W, cells: &[ProfileCell]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "window",
        "overlap",
        "n_windows",
        "sampling_s",
        "feature_s",
        "classification_s",
        "wall_s",
        "sampling_var_s2",
        "feature_var_s2",
        "classification_var_s2",
        "wall_var_s2",
    ])?;
    for c in cells {
        let t = &c.timing;
        let v = &c.variance;
        w.write_record([
            t.window_size.to_string(),
            format_overlap(t.overlap),
            t.n_windows.to_string(),
            TimingBreakdown::seconds(t.sampling_ns).to_string(),
            TimingBreakdown::seconds(t.feature_ns).to_string(),
            TimingBreakdown::seconds(t.classification_ns).to_string(),
            TimingBreakdown::seconds(t.wall_ns).to_string(),
            (v.sampling * 1e-18).to_string(),
            (v.feature * 1e-18).to_string(),
            (v.classification * 1e-18).to_string(),
            (v.wall * 1e-18).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Energy and accuracy per configuration.
pub fn write_energy_csv<W: std::io::Write>(out: W, cells: &[ProfileCell]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["window", "overlap", "n_windows", "joules", "accuracy"])?;
    for c in cells {
        w.write_record([
            c.timing.window_size.to_string(),
            format_overlap(c.timing.overlap),
            c.timing.n_windows.to_string(),
            c.joules.to_string(),
            c.accuracy.map(|a| a.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn breakdown(s: u64, f: u64, c: u64, wall: u64) -> TimingBreakdown {
        TimingBreakdown {
            sampling_ns: s,
            feature_ns: f,
            classification_ns: c,
            wall_ns: wall,
            ..Default::default()
        }
    }

    #[test]
    fn phase_energy() {
        let m = PowerModel {
            sampling_watts: 2.0,
            feature_watts: 3.0,
            classification_watts: 5.0,
            idle_watts: 0.5,
        };
        let t = breakdown(1_000_000_000, 2_000_000_000, 500_000_000, 4_500_000_000);
        assert!((m.energy(&t) - (2.0 + 6.0 + 2.5 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn power_model_toml() {
        let m = PowerModel::from_toml("feature_watts = 4.5\nidle_watts = 0.2\n").unwrap();
        assert_eq!(m.feature_watts, 4.5);
        assert_eq!(m.sampling_watts, 1.0);
        assert!(PowerModel::from_toml("sampling_watts = -1.0").is_err());
        assert!(PowerModel::from_toml("bogus = 1.0").is_err());
    }

    #[test]
    fn power_log_integration() {
        let log = PowerLog::read_csv("timestamp_seconds,watts\n0,1\n1,3\n2,3\n".as_bytes()).unwrap();
        assert!((log.integrate(0.0, 2.0).unwrap() - 5.0).abs() < 1e-12);
        assert!((log.integrate(0.5, 1.5).unwrap() - (0.5 * (2.0 + 3.0) * 0.5 + 1.5)).abs() < 1e-12);
        assert!(matches!(log.integrate(-1.0, 1.0), Err(Error::PowerLogCoverage { .. })));
        assert!(log.integrate(1.0, 2.5).is_err());
    }

    #[test]
    fn power_log_rejects_disorder() {
        assert!(PowerLog::new(vec![(0.0, 1.0), (0.0, 1.0)]).is_err());
        assert!(PowerLog::new(vec![(0.0, 1.0)]).is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median_u64(&mut [5, 1, 3]), 3);
        assert_eq!(median_u64(&mut [4, 1, 3, 2]), 2);
        assert_eq!(variance(&[1, 3]), 1.0);
    }
}
