//! Hoeffding tree (VFDT) for numeric features.
//!
//! Each leaf keeps class counts and, per (feature, class), a Gaussian summary
//! with the observed range. Every `grace_period` instances a non-pure leaf
//! scores a fixed number of evenly spaced thresholds per feature by estimated
//! information gain and splits when the best candidate beats the runner-up by
//! more than the Hoeffding bound, or when the bound falls under the tie
//! threshold.

use std::hash::Hasher;

use serde::{Deserialize, Serialize};

use super::{check_dims, hash_f64s, ClassDistribution, IncrementalClassifier, RunningStats};
use crate::error::{Error, Result};

/// A candidate split must send at least this fraction of the leaf's weight to
/// each side.
const MIN_BRANCH_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingTreeConfig {
    /// Allowed probability of choosing the wrong split attribute.
    pub delta: f64,
    pub tie_threshold: f64,
    pub grace_period: u64,
    /// Candidate thresholds evaluated per feature.
    pub split_candidates: usize,
    pub max_depth: Option<usize>,
}

impl Default for HoeffdingTreeConfig {
    fn default() -> Self {
        Self {
            delta: 1e-7,
            tie_threshold: 0.05,
            grace_period: 200,
            split_candidates: 10,
            max_depth: None,
        }
    }
}

/// `sqrt(R² ln(1/δ) / 2n)`.
pub fn hoeffding_bound(range: f64, delta: f64, n: u64) -> Result<f64> {
    if !(range > 0.0 && range.is_finite()) {
        return Err(Error::InvalidArgument(format!("range must be positive, got {range}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must be in (0, 1), got {delta}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    Ok((range * range * (1.0 / delta).ln() / (2.0 * n as f64)).sqrt())
}

/// Shannon entropy in bits of a weight vector.
pub fn entropy(weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    -weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| {
            let p = w / total;
            p * p.log2()
        })
        .sum::<f64>()
}

/// Entropy of `parent` minus the weighted entropy of `children`.
pub fn information_gain(parent: &[f64], children: &[Vec<f64>]) -> f64 {
    let total: f64 = parent.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let weighted: f64 = children
        .iter()
        .map(|c| c.iter().sum::<f64>() / total * entropy(c))
        .sum();
    entropy(parent) - weighted
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

#[derive(Debug, Clone)]
struct ClassFeatureStats {
    moments: RunningStats,
    min: f64,
    max: f64,
}

impl Default for ClassFeatureStats {
    fn default() -> Self {
        Self {
            moments: RunningStats::default(),
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl ClassFeatureStats {
    fn push(&mut self, x: f64) {
        self.moments.push(x);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    /// Estimated weight at or below `threshold`.
    fn weight_below(&self, threshold: f64) -> f64 {
        let n = self.moments.count as f64;
        if n == 0.0 || threshold < self.min {
            0.0
        } else if threshold >= self.max {
            n
        } else {
            let sd = self.moments.std_dev();
            if sd > 0.0 {
                n * normal_cdf((threshold - self.moments.mean) / sd)
            } else if self.moments.mean <= threshold {
                n
            } else {
                0.0
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Leaf {
    /// Instances routed here, per class.
    observed: Vec<u64>,
    /// Class weights estimated when the parent split; prediction only.
    prior: Vec<f64>,
    /// Indexed `[feature][class]`; empty until the first instance.
    stats: Vec<Vec<ClassFeatureStats>>,
    seen_at_last_check: u64,
    depth: usize,
}

impl Leaf {
    fn new(prior: Vec<f64>, depth: usize) -> Self {
        Self {
            observed: vec![0; prior.len()],
            prior,
            stats: Vec::new(),
            seen_at_last_check: 0,
            depth,
        }
    }

    fn seen(&self) -> u64 {
        self.observed.iter().sum()
    }

    fn is_pure(&self) -> bool {
        self.observed.iter().filter(|&&c| c > 0).count() <= 1
    }

    fn distribution(&self) -> ClassDistribution {
        let weights = self
            .observed
            .iter()
            .zip(&self.prior)
            .map(|(&o, &p)| o as f64 + p + 1.0)
            .collect();
        ClassDistribution::from_weights(weights)
    }

    fn learn(&mut self, x: &[f64], class: usize) {
        if self.stats.is_empty() {
            self.stats = vec![vec![ClassFeatureStats::default(); self.observed.len()]; x.len()];
        }
        self.observed[class] += 1;
        for (feature, &v) in self.stats.iter_mut().zip(x) {
            feature[class].push(v);
        }
    }

    /// Best threshold of one feature: `(gain, threshold, left, right)`.
    fn best_threshold(
        &self,
        feature: usize,
        candidates: usize,
        parent: &[f64],
    ) -> Option<(f64, f64, Vec<f64>, Vec<f64>)> {
        let per_class = &self.stats[feature];
        let lo = per_class.iter().map(|s| s.min).fold(f64::INFINITY, f64::min);
        let hi = per_class.iter().map(|s| s.max).fold(f64::NEG_INFINITY, f64::max);
        if !(lo < hi) {
            return None;
        }
        let total: f64 = parent.iter().sum();
        let mut best: Option<(f64, f64, Vec<f64>, Vec<f64>)> = None;
        for i in 1..=candidates {
            let threshold = lo + (hi - lo) * i as f64 / (candidates + 1) as f64;
            let left: Vec<f64> = per_class.iter().map(|s| s.weight_below(threshold)).collect();
            let right: Vec<f64> = parent.iter().zip(&left).map(|(p, l)| (p - l).max(0.0)).collect();
            let (lw, rw) = (left.iter().sum::<f64>(), right.iter().sum::<f64>());
            if lw < MIN_BRANCH_FRACTION * total || rw < MIN_BRANCH_FRACTION * total {
                continue;
            }
            let gain = information_gain(parent, &[left.clone(), right.clone()]);
            if best.as_ref().is_none_or(|b| gain > b.0) {
                best = Some((gain, threshold, left, right));
            }
        }
        best
    }

    /// Returns the replacement split node when the split criterion fires.
    fn try_split(&mut self, config: &HoeffdingTreeConfig, range: f64) -> Option<Node> {
        let seen = self.seen();
        if seen - self.seen_at_last_check < config.grace_period {
            return None;
        }
        self.seen_at_last_check = seen;
        if self.is_pure() || config.max_depth.is_some_and(|d| self.depth >= d) {
            return None;
        }

        let parent: Vec<f64> = self.observed.iter().map(|&c| c as f64).collect();
        let mut candidates: Vec<(usize, f64, f64, Vec<f64>, Vec<f64>)> = (0..self.stats.len())
            .filter_map(|f| {
                self.best_threshold(f, config.split_candidates, &parent)
                    .map(|(g, t, l, r)| (f, g, t, l, r))
            })
            .collect();
        // stable: equal gains keep the lower feature index first
        candidates.sort_by(|a, b| b.1.total_cmp(&a.1));
        let best = candidates.first()?;
        // not splitting at all scores zero
        let runner_up = candidates.get(1).map_or(0.0, |c| c.1).max(0.0);
        let epsilon = hoeffding_bound(range, config.delta, seen).ok()?;
        if best.1 <= 0.0 || !(best.1 - runner_up > epsilon || epsilon < config.tie_threshold) {
            return None;
        }
        let (feature, _, threshold, left, right) = candidates.swap_remove(0);
        Some(Node::Split {
            feature,
            threshold,
            left: Box::new(Node::Leaf(Leaf::new(left, self.depth + 1))),
            right: Box::new(Node::Leaf(Leaf::new(right, self.depth + 1))),
        })
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(Leaf),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn learn(&mut self, x: &[f64], class: usize, config: &HoeffdingTreeConfig, range: f64) {
        match self {
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let child = if x[*feature] <= *threshold { left } else { right };
                child.learn(x, class, config, range);
            }
            Node::Leaf(leaf) => {
                leaf.learn(x, class);
                if let Some(split) = leaf.try_split(config, range) {
                    *self = split;
                }
            }
        }
    }

    fn leaf_for(&self, x: &[f64]) -> &Leaf {
        let mut node = self;
        loop {
            match node {
                Node::Leaf(leaf) => return leaf,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Node)) {
        f(self);
        if let Node::Split { left, right, .. } = self {
            left.visit(f);
            right.visit(f);
        }
    }
}

/// Incremental decision tree with binary numeric splits.
#[derive(Debug, Clone)]
pub struct HoeffdingTree {
    config: HoeffdingTreeConfig,
    num_classes: usize,
    dims: Option<usize>,
    root: Node,
    updates: u64,
}

impl HoeffdingTree {
    pub fn new(config: HoeffdingTreeConfig, num_classes: usize) -> Self {
        assert!(num_classes >= 1);
        Self {
            config,
            num_classes,
            dims: None,
            root: Node::Leaf(Leaf::new(vec![0.0; num_classes], 0)),
            updates: 0,
        }
    }

    pub fn config(&self) -> &HoeffdingTreeConfig {
        &self.config
    }

    /// `log2` of the class count (at least 1).
    pub fn range(&self) -> f64 {
        (self.num_classes.max(2) as f64).log2()
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// `(feature, threshold)` of every internal node in pre-order.
    pub fn splits(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        self.root.visit(&mut |n| {
            if let Node::Split {
                feature, threshold, ..
            } = n
            {
                out.push((*feature, *threshold));
            }
        });
        out
    }

    pub fn split_count(&self) -> usize {
        self.splits().len()
    }

    /// Instances routed to each leaf, pre-order.
    pub fn leaf_counts(&self) -> Vec<u64> {
        let mut out = Vec::new();
        self.root.visit(&mut |n| {
            if let Node::Leaf(l) = n {
                out.push(l.seen());
            }
        });
        out
    }

    pub fn depth(&self) -> usize {
        let mut depth = 0;
        self.root.visit(&mut |n| {
            if let Node::Leaf(l) = n {
                depth = depth.max(l.depth);
            }
        });
        depth
    }
}

impl IncrementalClassifier for HoeffdingTree {
    fn train(&mut self, features: &[f64], class: usize) {
        assert!(class < self.num_classes, "class index out of range");
        let dims = *self.dims.get_or_insert(features.len());
        assert_eq!(dims, features.len(), "feature dimension changed");
        let range = self.range();
        self.root.learn(features, class, &self.config, range);
        self.updates += 1;
    }

    /// Laplace-smoothed class frequencies of the reached leaf.
    fn predict(&self, features: &[f64]) -> Result<ClassDistribution> {
        check_dims(self.dims, features.len())?;
        Ok(self.root.leaf_for(features).distribution())
    }

    fn hash_state(&self, h: &mut dyn Hasher) {
        h.write_u64(self.updates);
        self.root.visit(&mut |n| match n {
            Node::Split {
                feature, threshold, ..
            } => {
                h.write_u8(1);
                h.write_usize(*feature);
                h.write_u64(threshold.to_bits());
            }
            Node::Leaf(l) => {
                h.write_u8(0);
                for &c in &l.observed {
                    h.write_u64(c);
                }
                hash_f64s(h, &l.prior);
                h.write_u64(l.seen_at_last_check);
                for per_class in &l.stats {
                    for s in per_class {
                        s.moments.hash_into(h);
                        h.write_u64(s.min.to_bits());
                        h.write_u64(s.max.to_bits());
                    }
                }
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bound_reference_value() {
        // sqrt(ln(20) / 2000)
        let eps = hoeffding_bound(1.0, 0.05, 1000).unwrap();
        assert!((eps - 0.038_702_275_602).abs() < 1e-11);
        assert!((eps - 0.03870).abs() < 5e-6);
    }

    #[test]
    fn bound_monotone_and_scaling() {
        let mut prev = f64::INFINITY;
        for n in 1..200 {
            let e = hoeffding_bound(2.0, 1e-7, n).unwrap();
            assert!(e < prev);
            prev = e;
        }
        let a = hoeffding_bound(1.0, 0.01, 100).unwrap();
        let b = hoeffding_bound(1.0, 0.1, 100).unwrap();
        assert!(b < a);
        for n in [1u64, 3, 17, 250, 10_007] {
            let e = hoeffding_bound(3.5, 1e-7, n).unwrap();
            assert_eq!(hoeffding_bound(3.5, 1e-7, 4 * n).unwrap(), e / 2.0);
        }
    }

    #[test]
    fn bound_domain_errors() {
        assert!(hoeffding_bound(0.0, 0.1, 10).is_err());
        assert!(hoeffding_bound(1.0, 0.0, 10).is_err());
        assert!(hoeffding_bound(1.0, 1.0, 10).is_err());
        assert!(hoeffding_bound(1.0, 0.1, 0).is_err());
    }

    #[test]
    fn pure_split_gain_equals_parent_entropy() {
        let parent = [30.0, 10.0, 20.0];
        let children = vec![vec![30.0, 0.0, 0.0], vec![0.0, 10.0, 20.0]];
        let gain = information_gain(&parent, &children);
        let children_pure = vec![
            vec![30.0, 0.0, 0.0],
            vec![0.0, 10.0, 0.0],
            vec![0.0, 0.0, 20.0],
        ];
        assert!((information_gain(&parent, &children_pure) - entropy(&parent)).abs() < 1e-12);
        assert!(gain < entropy(&parent));
        assert!((entropy(&[1.0, 1.0]) - 1.0).abs() < 1e-15);
        assert_eq!(entropy(&[5.0, 0.0]), 0.0);
    }

    #[test]
    fn single_class_never_splits() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut tree = HoeffdingTree::new(HoeffdingTreeConfig::default(), 3);
        for _ in 0..2000 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            tree.train(&x, 2);
        }
        assert_eq!(tree.split_count(), 0);
        assert_eq!(tree.predict(&[0.0; 4]).unwrap().argmax(), 2);
    }

    #[test]
    fn laplace_smoothing() {
        let mut tree = HoeffdingTree::new(HoeffdingTreeConfig::default(), 2);
        let d = tree.predict(&[]).unwrap();
        assert_eq!(d.probs(), &[0.5, 0.5]);
        for _ in 0..8 {
            tree.train(&[1.0], 0);
        }
        let d = tree.predict(&[1.0]).unwrap();
        assert!((d.prob(0) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn separable_stream_splits_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut tree = HoeffdingTree::new(HoeffdingTreeConfig::default(), 2);
        for _ in 0..10_000 {
            let class = rng.random_range(0..2usize);
            let x = [
                class as f64 * 2.0 + rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
            ];
            tree.train(&x, class);
        }
        let splits = tree.splits();
        assert_eq!(splits.len(), 1);
        assert_eq!(splits[0].0, 0);
        assert!(splits[0].1 > 1.0 && splits[0].1 < 2.0);
        // The root saw one grace period before splitting.
        assert_eq!(tree.updates(), 10_000);
        assert_eq!(tree.leaf_counts().iter().sum::<u64>(), 10_000 - 200);
    }

    #[test]
    fn max_depth_caps_growth() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let config = HoeffdingTreeConfig {
            max_depth: Some(0),
            ..Default::default()
        };
        let mut tree = HoeffdingTree::new(config, 2);
        for _ in 0..5000 {
            let class = rng.random_range(0..2usize);
            tree.train(&[class as f64 * 5.0 + rng.random_range(0.0..1.0)], class);
        }
        assert_eq!(tree.split_count(), 0);
    }
}
