use std::collections::VecDeque;
use std::hash::Hasher;

use serde::{Deserialize, Serialize};

use super::{check_dims, hash_f64s, ClassDistribution, IncrementalClassifier, RunningStats};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    /// Maximum stored instances; the oldest is evicted beyond this.
    pub capacity: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self { k: 5, capacity: 5000 }
    }
}

/// Bounded-memory k-nearest-neighbour classifier.
///
/// Distances are Euclidean over z-scored features, using running statistics
/// of every instance ever trained (including evicted ones). Features with zero
/// spread are ignored.
#[derive(Debug, Clone)]
pub struct KnnStore {
    config: KnnConfig,
    num_classes: usize,
    buffer: VecDeque<(Vec<f64>, usize)>,
    stats: Vec<RunningStats>,
}

impl KnnStore {
    pub fn new(config: KnnConfig, num_classes: usize) -> Self {
        assert!(config.k >= 1 && config.capacity >= 1, "k and capacity must be positive");
        Self {
            config,
            num_classes,
            buffer: VecDeque::with_capacity(config.capacity.min(1 << 16)),
            stats: Vec::new(),
        }
    }

    pub fn config(&self) -> &KnnConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    /// Stored instances, oldest first.
    pub fn stored(&self) -> impl Iterator<Item = (&[f64], usize)> {
        self.buffer.iter().map(|(x, c)| (x.as_slice(), *c))
    }

    /// Per-feature standard deviations from the running statistics.
    pub fn feature_scales(&self) -> Vec<f64> {
        self.stats.iter().map(|s| s.std_dev()).collect()
    }

    /// Buffer positions and squared distances of the `k` nearest neighbours
    /// (fewer if the store holds fewer), nearest first; equal distances keep
    /// insertion order.
    pub fn neighbors_with_scales(&self, query: &[f64], scales: &[f64]) -> Vec<(usize, f64)> {
        let inv: Vec<f64> = scales
            .iter()
            .map(|&s| if s > 1e-12 { 1.0 / s } else { 0.0 })
            .collect();
        let mut dists: Vec<(usize, f64)> = self
            .buffer
            .iter()
            .enumerate()
            .map(|(pos, (x, _))| {
                let d = x
                    .iter()
                    .zip(query)
                    .zip(&inv)
                    .map(|((a, b), s)| {
                        let z = (a - b) * s;
                        z * z
                    })
                    .sum::<f64>();
                (pos, d)
            })
            .collect();
        let k = self.config.k.min(dists.len());
        if k < dists.len() {
            dists.select_nth_unstable_by(k - 1, |a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            dists.truncate(k);
        }
        dists.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        dists
    }

    pub fn neighbors(&self, query: &[f64]) -> Vec<(usize, f64)> {
        self.neighbors_with_scales(query, &self.feature_scales())
    }

    /// Vote fractions among neighbours found with the given feature scales.
    pub fn predict_with_scales(&self, query: &[f64], scales: &[f64]) -> Result<ClassDistribution> {
        if self.buffer.is_empty() {
            return Err(Error::Untrained);
        }
        check_dims(Some(self.stats.len()), query.len())?;
        let mut votes = vec![0.0; self.num_classes];
        for (pos, _) in self.neighbors_with_scales(query, scales) {
            votes[self.buffer[pos].1] += 1.0;
        }
        Ok(ClassDistribution::from_weights(votes))
    }
}

impl IncrementalClassifier for KnnStore {
    fn train(&mut self, features: &[f64], class: usize) {
        assert!(class < self.num_classes, "class index out of range");
        if self.stats.is_empty() {
            self.stats = vec![RunningStats::default(); features.len()];
        }
        assert_eq!(features.len(), self.stats.len(), "feature dimension changed");
        for (s, &x) in self.stats.iter_mut().zip(features) {
            s.push(x);
        }
        if self.buffer.len() == self.config.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back((features.to_vec(), class));
    }

    fn predict(&self, features: &[f64]) -> Result<ClassDistribution> {
        self.predict_with_scales(features, &self.feature_scales())
    }

    fn hash_state(&self, h: &mut dyn Hasher) {
        h.write_usize(self.buffer.len());
        for (x, c) in &self.buffer {
            hash_f64s(h, x);
            h.write_usize(*c);
        }
        for s in &self.stats {
            s.hash_into(h);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn predict_on_empty_errors() {
        let store = KnnStore::new(KnnConfig::default(), 2);
        assert!(matches!(store.predict(&[0.0]), Err(Error::Untrained)));
    }

    #[test]
    fn exact_match_single_instance() {
        let mut store = KnnStore::new(KnnConfig::default(), 3);
        store.train(&[1.0, 2.0], 2);
        let d = store.predict(&[1.0, 2.0]).unwrap();
        assert_eq!(d.prob(2), 1.0);
    }

    #[test]
    fn vote_fractions() {
        let mut store = KnnStore::new(KnnConfig { k: 3, capacity: 10 }, 2);
        store.train(&[0.0], 0);
        store.train(&[1.0], 0);
        store.train(&[2.0], 1);
        store.train(&[10.0], 1);
        store.train(&[11.0], 1);
        let d = store.predict(&[0.5]).unwrap();
        assert!((d.prob(0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((d.prob(1) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ties_prefer_older() {
        let mut store = KnnStore::new(KnnConfig { k: 1, capacity: 10 }, 2);
        store.train(&[-1.0], 1);
        store.train(&[1.0], 0);
        assert_eq!(store.predict(&[0.0]).unwrap().argmax(), 1);
        assert_eq!(store.neighbors(&[0.0])[0].0, 0);
    }

    #[test]
    fn fifo_eviction() {
        let mut store = KnnStore::new(KnnConfig { k: 1, capacity: 3 }, 2);
        for i in 0..5 {
            store.train(&[i as f64], i % 2);
        }
        assert_eq!(store.len(), 3);
        let firsts: Vec<f64> = store.stored().map(|(x, _)| x[0]).collect();
        assert_eq!(firsts, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn k_larger_than_store_uses_all() {
        let mut store = KnnStore::new(KnnConfig { k: 5, capacity: 10 }, 2);
        store.train(&[0.0], 0);
        store.train(&[1.0], 1);
        let d = store.predict(&[0.0]).unwrap();
        assert_eq!(d.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn zero_spread_feature_ignored() {
        let mut store = KnnStore::new(KnnConfig { k: 1, capacity: 10 }, 2);
        store.train(&[0.0, 7.0], 0);
        store.train(&[4.0, 7.0], 1);
        assert_eq!(store.predict(&[3.0, 1000.0]).unwrap().argmax(), 1);
    }

    #[test]
    fn cached_and_recomputed_scales_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut store = KnnStore::new(KnnConfig { k: 5, capacity: 500 }, 3);
        for _ in 0..300 {
            let x: Vec<f64> = (0..6).map(|j| rng.random_range(-5.0..5.0) * (j + 1) as f64).collect();
            store.train(&x, rng.random_range(0..3));
        }
        let stored: Vec<&[f64]> = store.stored().map(|(x, _)| x).collect();
        let recomputed: Vec<f64> = (0..6)
            .map(|j| {
                let n = stored.len() as f64;
                let mean = stored.iter().map(|x| x[j]).sum::<f64>() / n;
                (stored.iter().map(|x| (x[j] - mean).powi(2)).sum::<f64>() / n).sqrt()
            })
            .collect();
        for (a, b) in store.feature_scales().iter().zip(&recomputed) {
            assert!((a - b).abs() < 1e-6);
        }
        for _ in 0..50 {
            let q: Vec<f64> = (0..6).map(|_| rng.random_range(-20.0..20.0)).collect();
            let a = store.predict(&q).unwrap();
            let b = store.predict_with_scales(&q, &recomputed).unwrap();
            for (pa, pb) in a.probs().iter().zip(b.probs()) {
                assert!((pa - pb).abs() < 1e-6);
            }
        }
    }
}
