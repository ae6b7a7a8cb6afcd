//! Majority-vote ensemble of the three incremental learners, with a
//! confidence score and confidence-gated self-training.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::Hasher;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::ActivityId;
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::learners::{
    ClassDistribution, GaussianNb, HoeffdingTree, HoeffdingTreeConfig, IncrementalClassifier,
    KnnConfig, KnnStore, NaiveBayesConfig,
};

pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.99;
pub const MEMBER_COUNT: usize = 3;
pub const MEMBER_NAMES: [&str; MEMBER_COUNT] = ["knn", "naive_bayes", "hoeffding_tree"];

/// How self-labeled instances are folded back into the members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateStrategy {
    /// When ensemble confidence exceeds the threshold, train every member on
    /// the predicted label.
    #[default]
    AllMembers,
    /// Train a member on label `ℓ` when both other members predict `ℓ` with
    /// posterior above the threshold, regardless of the ensemble confidence.
    TriTraining,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub knn: KnnConfig,
    pub naive_bayes: NaiveBayesConfig,
    pub tree: HoeffdingTreeConfig,
    /// Self-training fires only when confidence is strictly above this.
    pub confidence_threshold: f64,
    pub strategy: UpdateStrategy,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            knn: KnnConfig::default(),
            naive_bayes: NaiveBayesConfig::default(),
            tree: HoeffdingTreeConfig::default(),
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
            strategy: UpdateStrategy::AllMembers,
        }
    }
}

/// Sorted set of activity labels known to a model; position is the class
/// index used by the learners.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSet {
    labels: Vec<ActivityId>,
}

impl ClassSet {
    pub fn from_labels(labels: impl IntoIterator<Item = ActivityId>) -> Self {
        let mut labels: Vec<ActivityId> = labels.into_iter().collect();
        labels.sort_unstable();
        labels.dedup();
        Self { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[ActivityId] {
        &self.labels
    }

    pub fn index_of(&self, label: ActivityId) -> Option<usize> {
        self.labels.binary_search(&label).ok()
    }

    pub fn label(&self, index: usize) -> ActivityId {
        self.labels[index]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: ActivityId,
    pub class_index: usize,
    pub confidence: f64,
    /// Per-member distributions, in [`MEMBER_NAMES`] order.
    pub members: [ClassDistribution; MEMBER_COUNT],
    /// Members whose argmax is the winning class.
    pub voters: usize,
}

/// Confidence histogram: ten equal-width buckets for confidences at or below
/// the gate threshold, plus one bucket for everything above it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfidenceHistogram {
    pub buckets: [u64; 10],
    pub above_threshold: u64,
}

impl ConfidenceHistogram {
    pub fn record(&mut self, confidence: f64, threshold: f64) {
        if confidence > threshold {
            self.above_threshold += 1;
        } else {
            let b = ((confidence * 10.0).floor().max(0.0) as usize).min(9);
            self.buckets[b] += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.buckets.iter().sum::<u64>() + self.above_threshold
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OnlineCounters {
    pub instances_seen: u64,
    pub self_updates: u64,
    pub histogram: ConfidenceHistogram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OnlineMode {
    /// Classify only; the model never changes.
    #[serde(rename = "sup")]
    SupervisedFrozen,
    /// Classify, then self-train on confident predictions.
    #[serde(rename = "semi")]
    SemiSupervised,
}

impl OnlineMode {
    pub const ALL: [OnlineMode; 2] = [OnlineMode::SupervisedFrozen, OnlineMode::SemiSupervised];

    pub fn as_str(self) -> &'static str {
        match self {
            OnlineMode::SupervisedFrozen => "sup",
            OnlineMode::SemiSupervised => "semi",
        }
    }
}

impl fmt::Display for OnlineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OnlineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sup" | "supervised" | "supervised_frozen" => Ok(OnlineMode::SupervisedFrozen),
            "semi" | "semi_supervised" => Ok(OnlineMode::SemiSupervised),
            other => Err(Error::UnknownMode(other.to_string())),
        }
    }
}

/// One line of the online audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub window_index: usize,
    pub true_label: ActivityId,
    pub predicted_label: ActivityId,
    pub confidence: f64,
    /// Whether the instance was trained back into the model.
    pub applied: bool,
}

impl AuditRecord {
    pub fn is_correct(&self) -> bool {
        self.true_label == self.predicted_label
    }
}

/// Writes the audit log as CSV with header
/// `window,true_label,predicted_label,confidence,applied`.
pub fn write_audit_csv<W: Write>(out: W, records: &[AuditRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["window", "true_label", "predicted_label", "confidence", "applied"])?;
    for r in records {
        w.write_record([
            r.window_index.to_string(),
            r.true_label.to_string(),
            r.predicted_label.to_string(),
            r.confidence.to_string(),
            (r.applied as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_audit_csv<R: std::io::Read>(input: R) -> csv::Result<Vec<AuditRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or_default();
        let bad = |what: &str| csv::Error::from(std::io::Error::new(std::io::ErrorKind::InvalidData, what.to_string()));
        out.push(AuditRecord {
            window_index: field(0).parse().map_err(|_| bad("window"))?,
            true_label: field(1).parse().map_err(|_| bad("true_label"))?,
            predicted_label: field(2).parse().map_err(|_| bad("predicted_label"))?,
            confidence: field(3).parse().map_err(|_| bad("confidence"))?,
            applied: field(4) == "1",
        });
    }
    Ok(out)
}

/// Result of streaming a test user's instances through a model.
#[derive(Debug, Clone)]
pub struct OnlineRun {
    pub records: Vec<AuditRecord>,
    pub model: EnsembleModel,
    /// Counters of this run alone.
    pub counters: OnlineCounters,
}

impl OnlineRun {
    pub fn correct(&self) -> usize {
        self.records.iter().filter(|r| r.is_correct()).count()
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleModel {
    config: EnsembleConfig,
    classes: ClassSet,
    knn: KnnStore,
    naive_bayes: GaussianNb,
    tree: HoeffdingTree,
    counters: OnlineCounters,
}

impl EnsembleModel {
    /// Trains all three members on every instance, in order. The class set is
    /// the set of labels present in `instances`.
    pub fn train_offline(config: EnsembleConfig, instances: &[FeatureVector]) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        let classes = ClassSet::from_labels(instances.iter().map(|fv| fv.label));
        let n = classes.len();
        let mut model = Self {
            knn: KnnStore::new(config.knn, n),
            naive_bayes: GaussianNb::new(config.naive_bayes, n),
            tree: HoeffdingTree::new(config.tree, n),
            config,
            classes,
            counters: OnlineCounters::default(),
        };
        for fv in instances {
            let class = model.classes.index_of(fv.label).expect("label in class set");
            model.train_members(&fv.values, class, [true; MEMBER_COUNT]);
        }
        Ok(model)
    }

    fn train_members(&mut self, x: &[f64], class: usize, which: [bool; MEMBER_COUNT]) {
        if which[0] {
            self.knn.train(x, class);
        }
        if which[1] {
            self.naive_bayes.train(x, class);
        }
        if which[2] {
            self.tree.train(x, class);
        }
    }

    pub fn config(&self) -> &EnsembleConfig {
        &self.config
    }

    pub fn classes(&self) -> &ClassSet {
        &self.classes
    }

    pub fn counters(&self) -> &OnlineCounters {
        &self.counters
    }

    pub fn knn(&self) -> &KnnStore {
        &self.knn
    }

    pub fn naive_bayes(&self) -> &GaussianNb {
        &self.naive_bayes
    }

    pub fn tree(&self) -> &HoeffdingTree {
        &self.tree
    }

    /// Overrides the gate threshold (e.g. above 1 to disable self-training).
    pub fn set_confidence_threshold(&mut self, threshold: f64) {
        self.config.confidence_threshold = threshold;
    }

    /// Majority vote over member argmaxes. Vote ties go to the class with the
    /// largest summed posterior, then the lowest class index. Confidence is
    /// the mean posterior of the agreeing members times the fraction agreeing.
    pub fn classify(&self, features: &[f64]) -> Result<Prediction> {
        let members = [
            self.knn.predict(features)?,
            self.naive_bayes.predict(features)?,
            self.tree.predict(features)?,
        ];
        Ok(combine(&self.classes, members))
    }

    /// Trains the members on the predicted label when the gate fires.
    /// Returns whether anything was trained; otherwise the model is untouched.
    pub fn self_update(&mut self, features: &[f64], prediction: &Prediction) -> bool {
        let threshold = self.config.confidence_threshold;
        let which = match self.config.strategy {
            UpdateStrategy::AllMembers => [prediction.confidence > threshold; MEMBER_COUNT],
            UpdateStrategy::TriTraining => {
                let confident = |m: usize| {
                    let d = &prediction.members[m];
                    d.argmax() == prediction.class_index && d.prob(prediction.class_index) > threshold
                };
                std::array::from_fn(|i| {
                    (0..MEMBER_COUNT).filter(|&j| j != i).all(confident)
                })
            }
        };
        if !which.iter().any(|&w| w) {
            return false;
        }
        self.train_members(features, prediction.class_index, which);
        self.counters.self_updates += 1;
        true
    }

    /// Hash of everything the members have learned. Audit counters other than
    /// the self-update count are excluded.
    pub fn state_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.knn.hash_state(&mut h);
        self.naive_bayes.hash_state(&mut h);
        self.tree.hash_state(&mut h);
        h.write_u64(self.counters.self_updates);
        h.finish()
    }

    /// Streams `instances` through the model in order. Their labels are used
    /// only for the audit log.
    pub fn run_online(mut self, instances: &[FeatureVector], mode: OnlineMode) -> Result<OnlineRun> {
        let threshold = self.config.confidence_threshold;
        let mut run = OnlineCounters::default();
        let mut records = Vec::with_capacity(instances.len());
        for fv in instances {
            let prediction = self.classify(&fv.values)?;
            let applied = match mode {
                OnlineMode::SupervisedFrozen => false,
                OnlineMode::SemiSupervised => self.self_update(&fv.values, &prediction),
            };
            run.instances_seen += 1;
            run.self_updates += applied as u64;
            run.histogram.record(prediction.confidence, threshold);
            records.push(AuditRecord {
                window_index: fv.window_index,
                true_label: fv.label,
                predicted_label: prediction.label,
                confidence: prediction.confidence,
                applied,
            });
        }
        if mode == OnlineMode::SemiSupervised {
            self.counters.instances_seen += run.instances_seen;
            for (total, b) in self.counters.histogram.buckets.iter_mut().zip(run.histogram.buckets) {
                *total += b;
            }
            self.counters.histogram.above_threshold += run.histogram.above_threshold;
        }
        Ok(OnlineRun {
            records,
            model: self,
            counters: run,
        })
    }
}

/// Vote and confidence from member distributions.
pub fn combine(classes: &ClassSet, members: [ClassDistribution; MEMBER_COUNT]) -> Prediction {
    let n = classes.len();
    let mut votes = vec![0usize; n];
    let mut summed = vec![0.0f64; n];
    for d in &members {
        votes[d.argmax()] += 1;
        for (s, p) in summed.iter_mut().zip(d.probs()) {
            *s += p;
        }
    }
    let mut winner = 0;
    for c in 1..n {
        if votes[c] > votes[winner] || (votes[c] == votes[winner] && summed[c] > summed[winner]) {
            winner = c;
        }
    }
    let voters = votes[winner];
    let agreeing: f64 = members
        .iter()
        .filter(|d| d.argmax() == winner)
        .map(|d| d.prob(winner))
        .sum();
    let confidence = if voters == 0 {
        0.0
    } else {
        (agreeing / voters as f64) * (voters as f64 / MEMBER_COUNT as f64)
    };
    Prediction {
        label: classes.label(winner),
        class_index: winner,
        confidence,
        members,
        voters,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(p: &[f64]) -> ClassDistribution {
        ClassDistribution::from_weights(p.to_vec())
    }

    fn classes() -> ClassSet {
        ClassSet::from_labels([4, 1, 24, 4])
    }

    #[test]
    fn class_set_sorted_and_deduped() {
        let c = classes();
        assert_eq!(c.labels(), &[1, 4, 24]);
        assert_eq!(c.index_of(24), Some(2));
        assert_eq!(c.index_of(3), None);
    }

    #[test]
    fn unanimous_certain() {
        let p = combine(&classes(), [dist(&[0.0, 1.0, 0.0]), dist(&[0.0, 1.0, 0.0]), dist(&[0.0, 1.0, 0.0])]);
        assert_eq!(p.label, 4);
        assert_eq!(p.confidence, 1.0);
        assert_eq!(p.voters, 3);
    }

    #[test]
    fn two_to_one() {
        let p = combine(
            &classes(),
            [dist(&[0.9, 0.1, 0.0]), dist(&[0.8, 0.2, 0.0]), dist(&[0.4, 0.6, 0.0])],
        );
        assert_eq!(p.label, 1);
        assert!((p.confidence - 0.85 * 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn three_way_tie_uses_summed_posterior() {
        let p = combine(
            &classes(),
            [dist(&[0.5, 0.3, 0.2]), dist(&[0.0, 0.6, 0.4]), dist(&[0.0, 0.45, 0.55])],
        );
        // sums: 0.5, 1.35, 1.15
        assert_eq!(p.label, 4);
        assert!((p.confidence - 0.6 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("sup".parse::<OnlineMode>().unwrap(), OnlineMode::SupervisedFrozen);
        assert_eq!("semi".parse::<OnlineMode>().unwrap(), OnlineMode::SemiSupervised);
        assert!(matches!("both".parse::<OnlineMode>(), Err(Error::UnknownMode(_))));
    }

    #[test]
    fn histogram_buckets() {
        let mut h = ConfidenceHistogram::default();
        for c in [0.0, 0.05, 0.5, 0.99, 0.995, 1.0] {
            h.record(c, 0.99);
        }
        assert_eq!(h.buckets[0], 2);
        assert_eq!(h.buckets[5], 1);
        assert_eq!(h.buckets[9], 1);
        assert_eq!(h.above_threshold, 2);
        assert_eq!(h.total(), 6);
    }

    fn fv(values: Vec<f64>, label: ActivityId, window_index: usize) -> FeatureVector {
        FeatureVector {
            values,
            label,
            user_id: 1,
            window_index,
            missing_signals: 0,
            interpolated: false,
        }
    }

    #[test]
    fn empty_training_set() {
        assert!(matches!(
            EnsembleModel::train_offline(EnsembleConfig::default(), &[]),
            Err(Error::EmptyTrainingSet)
        ));
    }

    #[test]
    fn single_class_training() {
        let train: Vec<_> = (0..20).map(|i| fv(vec![i as f64, 1.0], 5, i)).collect();
        let model = EnsembleModel::train_offline(EnsembleConfig::default(), &train).unwrap();
        let p = model.classify(&[-40.0, 3.0]).unwrap();
        assert_eq!(p.label, 5);
        assert_eq!(p.confidence, 1.0);
    }

    #[test]
    fn gate_is_strict() {
        let train = vec![fv(vec![0.0], 1, 0), fv(vec![1.0], 2, 1)];
        let mut model = EnsembleModel::train_offline(EnsembleConfig::default(), &train).unwrap();
        let before = model.state_hash();
        let mut p = model.classify(&[0.0]).unwrap();
        p.confidence = 0.99;
        assert!(!model.self_update(&[0.0], &p));
        assert_eq!(model.state_hash(), before);
        p.confidence = 1.0;
        assert!(model.self_update(&[0.0], &p));
        assert_eq!(model.counters().self_updates, 1);
        assert_ne!(model.state_hash(), before);
    }

    #[test]
    fn audit_csv_round_trip() {
        let records = vec![
            AuditRecord { window_index: 3, true_label: 1, predicted_label: 4, confidence: 0.123456789, applied: false },
            AuditRecord { window_index: 4, true_label: 4, predicted_label: 4, confidence: 1.0, applied: true },
        ];
        let mut buf = Vec::new();
        write_audit_csv(&mut buf, &records).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("window,true_label,predicted_label,confidence,applied\n"));
        assert_eq!(read_audit_csv(buf.as_slice()).unwrap(), records);
    }
}
