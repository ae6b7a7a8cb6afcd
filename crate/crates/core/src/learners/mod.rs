//! Incremental classifiers trained one instance at a time.
//!
//! Classes are dense indices `0..num_classes`; mapping them to activity labels
//! is the caller's job (see [`crate::ensemble::ClassSet`]).

mod hoeffding;
mod knn;
mod naive_bayes;

use std::hash::Hasher;

pub use hoeffding::{entropy, hoeffding_bound, information_gain, HoeffdingTree, HoeffdingTreeConfig};
pub use knn::{KnnConfig, KnnStore};
pub use naive_bayes::{GaussianNb, NaiveBayesConfig};

use crate::error::{Error, Result};

/// A probability distribution over class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution {
    probs: Vec<f64>,
}

impl ClassDistribution {
    /// Normalizes non-negative weights. All-zero weights give a uniform
    /// distribution.
    pub fn from_weights(mut weights: Vec<f64>) -> Self {
        debug_assert!(weights.iter().all(|w| *w >= 0.0 && w.is_finite()));
        let total: f64 = weights.iter().sum();
        if total > 0.0 {
            weights.iter_mut().for_each(|w| *w /= total);
        } else if !weights.is_empty() {
            let u = 1.0 / weights.len() as f64;
            weights.iter_mut().for_each(|w| *w = u);
        }
        Self { probs: weights }
    }

    /// All mass on one class.
    pub fn certain(num_classes: usize, class: usize) -> Self {
        let mut probs = vec![0.0; num_classes];
        probs[class] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, class: usize) -> f64 {
        self.probs.get(class).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Most probable class; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    /// Whether every entry is non-negative and the entries sum to 1 within
    /// `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        !self.probs.is_empty()
            && self.probs.iter().all(|p| p.is_finite() && *p >= 0.0)
            && (self.probs.iter().sum::<f64>() - 1.0).abs() <= tol
    }
}

/// Contract shared by the ensemble members.
pub trait IncrementalClassifier {
    /// Folds one labeled instance into the model.
    fn train(&mut self, features: &[f64], class: usize);

    fn predict(&self, features: &[f64]) -> Result<ClassDistribution>;

    /// Feeds every bit of learned state into `hasher`.
    fn hash_state(&self, hasher: &mut dyn Hasher);
}

/// Welford accumulator for mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.m2 / self.count as f64).max(0.0)
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub(crate) fn hash_into(&self, h: &mut dyn Hasher) {
        h.write_u64(self.count);
        h.write_u64(self.mean.to_bits());
        h.write_u64(self.m2.to_bits());
    }
}

pub(crate) fn hash_f64s(h: &mut dyn Hasher, values: &[f64]) {
    h.write_usize(values.len());
    for v in values {
        h.write_u64(v.to_bits());
    }
}

pub(crate) fn check_dims(expected: Option<usize>, got: usize) -> Result<()> {
    match expected {
        Some(d) if d != got => Err(Error::LengthMismatch { left: d, right: got }),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distribution_basics() {
        let d = ClassDistribution::from_weights(vec![1.0, 3.0, 0.0]);
        assert_eq!(d.probs(), &[0.25, 0.75, 0.0]);
        assert_eq!(d.argmax(), 1);
        assert!(d.is_valid(1e-12));

        let u = ClassDistribution::from_weights(vec![0.0; 4]);
        assert_eq!(u.prob(3), 0.25);
        assert_eq!(u.argmax(), 0);

        assert_eq!(ClassDistribution::certain(3, 2).argmax(), 2);
    }

    #[test]
    fn running_stats_population_variance() {
        let mut s = RunningStats::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            s.push(x);
        }
        assert_eq!(s.mean, 2.5);
        assert!((s.variance() - 1.25).abs() < 1e-15);
    }
}
