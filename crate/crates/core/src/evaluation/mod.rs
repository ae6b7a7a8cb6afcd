//! Leave-one-user-out evaluation, grid sweeps and report emission.

mod report;
mod store;
mod sweep;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use report::{emit_reports, format_overlap, ReportOptions, ReportPaths};
pub use store::ResultsStore;
pub use sweep::{sweep, Grid, SweepOptions, SweepReport};

use crate::dataset::{ActivityId, SensorStream};
use crate::ensemble::{AuditRecord, EnsembleConfig, EnsembleModel, OnlineMode, OnlineRun};
use crate::error::{Error, Result};
use crate::features::{extract_stream, FeatureVector};
use crate::profiling::TimingBreakdown;
use crate::windowing::{WindowConfig, DEFAULT_PURITY};

/// One leave-one-user-out split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub test_user: u8,
    pub training_users: Vec<u8>,
}

/// One fold per user; each trains on every other user with a nonempty
/// stream.
pub fn louo_split(streams: &[SensorStream]) -> Result<Vec<Fold>> {
    if streams.len() < 2 {
        return Err(Error::TooFewUsers(streams.len()));
    }
    let mut users: Vec<u8> = streams.iter().map(|s| s.user_id).collect();
    users.sort_unstable();
    if users.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("duplicate user id among streams".into()));
    }
    let nonempty: Vec<u8> = {
        let mut v: Vec<u8> = streams.iter().filter(|s| !s.is_empty()).map(|s| s.user_id).collect();
        v.sort_unstable();
        v
    };
    Ok(users
        .iter()
        .map(|&test_user| Fold {
            test_user,
            training_users: nonempty.iter().copied().filter(|&u| u != test_user).collect(),
        })
        .collect())
}

/// Settings shared by every cell of an evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub ensemble: EnsembleConfig,
    /// Minimum window purity.
    pub purity: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            ensemble: EnsembleConfig::default(),
            purity: DEFAULT_PURITY,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityScore {
    pub windows: usize,
    pub correct: usize,
}

impl ActivityScore {
    pub fn accuracy(&self) -> Option<f64> {
        (self.windows > 0).then(|| self.correct as f64 / self.windows as f64)
    }
}

/// Accuracy of one (user, window size, overlap, mode) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub user_id: u8,
    pub window_size: usize,
    pub overlap: f64,
    pub mode: OnlineMode,
    pub seed: u64,
    pub windows: usize,
    pub correct: usize,
    pub per_activity: BTreeMap<ActivityId, ActivityScore>,
    pub self_updates: u64,
    /// The test stream carries a single activity label.
    pub single_activity: bool,
    #[serde(skip)]
    pub timing: Option<TimingBreakdown>,
}

impl FoldResult {
    /// `None` when the test stream produced no windows.
    pub fn accuracy(&self) -> Option<f64> {
        (self.windows > 0).then(|| self.correct as f64 / self.windows as f64)
    }

    pub fn is_empty(&self) -> bool {
        self.windows == 0
    }

    /// Tallies a run's audit log.
    pub fn from_records(
        user_id: u8,
        config: &WindowConfig,
        mode: OnlineMode,
        seed: u64,
        records: &[AuditRecord],
        single_activity: bool,
    ) -> Self {
        let mut per_activity: BTreeMap<ActivityId, ActivityScore> = BTreeMap::new();
        for r in records {
            let score = per_activity.entry(r.true_label).or_default();
            score.windows += 1;
            score.correct += r.is_correct() as usize;
        }
        Self {
            user_id,
            window_size: config.window_size(),
            overlap: config.overlap(),
            mode,
            seed,
            windows: records.len(),
            correct: records.iter().filter(|r| r.is_correct()).count(),
            per_activity,
            self_updates: records.iter().filter(|r| r.applied).count() as u64,
            single_activity,
            timing: None,
        }
    }
}

/// A scored cell together with its audit log.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub result: FoldResult,
    pub records: Vec<AuditRecord>,
}

/// Feature vectors of every user's stream under one window configuration.
pub fn featurize_users(
    streams: &[SensorStream],
    config: &WindowConfig,
    purity: f64,
) -> BTreeMap<u8, Vec<FeatureVector>> {
    streams
        .par_iter()
        .map(|s| (s.user_id, extract_stream(s, config, purity)))
        .collect()
}

/// Trains the offline model of a fold on its training users, in user order.
pub fn train_fold(
    fold: &Fold,
    features: &BTreeMap<u8, Vec<FeatureVector>>,
    config: &EnsembleConfig,
) -> Result<EnsembleModel> {
    let mut training: Vec<FeatureVector> = Vec::new();
    for user in &fold.training_users {
        if let Some(fvs) = features.get(user) {
            training.extend(fvs.iter().cloned());
        }
    }
    if let Some(leak) = training.iter().find(|fv| fv.user_id == fold.test_user) {
        return Err(Error::InvalidArgument(format!(
            "training data of fold {} contains window {} of the test user",
            fold.test_user, leak.window_index
        )));
    }
    EnsembleModel::train_offline(config.clone(), &training)
}

fn is_single_activity(stream: Option<&SensorStream>, test: &[FeatureVector]) -> bool {
    match stream {
        Some(s) => s.activities().len() == 1,
        None => {
            let mut labels: Vec<ActivityId> = test.iter().map(|fv| fv.label).collect();
            labels.sort_unstable();
            labels.dedup();
            labels.len() == 1
        }
    }
}

/// Runs a trained model over the test user's windows and scores it.
pub fn score_fold(
    fold: &Fold,
    model: EnsembleModel,
    test: &[FeatureVector],
    config: &WindowConfig,
    mode: OnlineMode,
    seed: u64,
    single_activity: bool,
) -> Result<(FoldOutcome, OnlineRun)> {
    let run = model.run_online(test, mode)?;
    let result = FoldResult::from_records(fold.test_user, config, mode, seed, &run.records, single_activity);
    let outcome = FoldOutcome {
        result,
        records: run.records.clone(),
    };
    Ok((outcome, run))
}

/// Segments and featurizes all streams, trains on the fold's training users
/// and streams the test user through the model.
pub fn evaluate_fold(
    fold: &Fold,
    streams: &[SensorStream],
    config: &WindowConfig,
    mode: OnlineMode,
    options: &PipelineOptions,
    seed: u64,
) -> Result<FoldOutcome> {
    let features = featurize_users(streams, config, options.purity);
    let test: &[FeatureVector] = features.get(&fold.test_user).map_or(&[], Vec::as_slice);
    let single = is_single_activity(streams.iter().find(|s| s.user_id == fold.test_user), test);
    if test.is_empty() {
        return Ok(FoldOutcome {
            result: FoldResult::from_records(fold.test_user, config, mode, seed, &[], single),
            records: Vec::new(),
        });
    }
    let model = train_fold(fold, &features, &options.ensemble)?;
    Ok(score_fold(fold, model, test, config, mode, seed, single)?.0)
}

pub(crate) fn single_activity_flags(streams: &[SensorStream]) -> BTreeMap<u8, bool> {
    streams
        .iter()
        .map(|s| (s.user_id, s.activities().len() == 1))
        .collect()
}
