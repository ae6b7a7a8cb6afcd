use std::hash::Hasher;

use serde::{Deserialize, Serialize};

use super::{check_dims, ClassDistribution, IncrementalClassifier, RunningStats};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesConfig {
    /// Lower bound on every per-class feature variance.
    pub variance_floor: f64,
}

impl Default for NaiveBayesConfig {
    fn default() -> Self {
        Self {
            variance_floor: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct ClassModel {
    count: u64,
    features: Vec<RunningStats>,
}

/// Gaussian naive Bayes with per-class running means and variances.
#[derive(Debug, Clone)]
pub struct GaussianNb {
    config: NaiveBayesConfig,
    dims: Option<usize>,
    classes: Vec<ClassModel>,
    total: u64,
}

impl GaussianNb {
    pub fn new(config: NaiveBayesConfig, num_classes: usize) -> Self {
        Self {
            config,
            dims: None,
            classes: vec![ClassModel::default(); num_classes],
            total: 0,
        }
    }

    pub fn total_count(&self) -> u64 {
        self.total
    }

    pub fn class_count(&self, class: usize) -> u64 {
        self.classes[class].count
    }

    /// Per-feature `(mean, population variance)` of one class, unfloored.
    pub fn class_moments(&self, class: usize) -> Vec<(f64, f64)> {
        self.classes[class]
            .features
            .iter()
            .map(|s| (s.mean, s.variance()))
            .collect()
    }

    /// Unnormalized log posterior of every class; `-inf` for unseen classes.
    pub fn log_joint(&self, features: &[f64]) -> Result<Vec<f64>> {
        if self.total == 0 {
            return Err(Error::Untrained);
        }
        check_dims(self.dims, features.len())?;
        let ln_total = (self.total as f64).ln();
        let half_ln_tau = 0.5 * std::f64::consts::TAU.ln();
        Ok(self
            .classes
            .iter()
            .map(|cm| {
                if cm.count == 0 {
                    return f64::NEG_INFINITY;
                }
                let mut lp = (cm.count as f64).ln() - ln_total;
                for (s, &x) in cm.features.iter().zip(features) {
                    let var = s.variance().max(self.config.variance_floor);
                    let d = x - s.mean;
                    lp -= half_ln_tau + 0.5 * var.ln() + d * d / (2.0 * var);
                }
                lp
            })
            .collect())
    }
}

impl IncrementalClassifier for GaussianNb {
    fn train(&mut self, features: &[f64], class: usize) {
        let dims = *self.dims.get_or_insert(features.len());
        assert_eq!(dims, features.len(), "feature dimension changed");
        let cm = &mut self.classes[class];
        if cm.features.is_empty() {
            cm.features = vec![RunningStats::default(); dims];
        }
        cm.count += 1;
        for (s, &x) in cm.features.iter_mut().zip(features) {
            s.push(x);
        }
        self.total += 1;
    }

    /// Posterior via log-sum-exp over the class log joints.
    fn predict(&self, features: &[f64]) -> Result<ClassDistribution> {
        let log_joint = self.log_joint(features)?;
        let max = log_joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights = log_joint
            .iter()
            .map(|&lp| if lp == f64::NEG_INFINITY { 0.0 } else { (lp - max).exp() })
            .collect();
        Ok(ClassDistribution::from_weights(weights))
    }

    fn hash_state(&self, h: &mut dyn Hasher) {
        h.write_u64(self.total);
        for cm in &self.classes {
            h.write_u64(cm.count);
            for s in &cm.features {
                s.hash_into(h);
            }
        }
    }
}
