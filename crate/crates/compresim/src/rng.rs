//! Seeded, labeled randomness streams.
//!
//! Every source of randomness in a simulation (each worker's oracle, each
//! compressor endpoint, the shared broadcast stream, data generation) is a
//! separate stream derived from a root seed and a string label. Streams with
//! distinct labels never share state, so adding a worker never perturbs the
//! draws of any other stream.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

/// One independent randomness stream, identified by (seed, label).
///
/// Identical (seed, label, draw-index) yields identical draws across runs and
/// platforms. The draw counter is exposed so lock-step consumers (shared
/// broadcast compression) can assert they stay aligned.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
    seed: u64,
    label: String,
    draws: u64,
}

impl RngStream {
    pub fn new(seed: u64, label: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update(label.as_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        RngStream {
            rng: ChaCha8Rng::from_seed(key),
            seed,
            label: label.to_string(),
            draws: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of logical draws made so far.
    pub fn draw_index(&self) -> u64 {
        self.draws
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.draws += 1;
        self.rng.random::<f64>()
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        self.draws += 1;
        self.rng.random_range(0..n)
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        self.draws += 1;
        StandardNormal.sample(&mut self.rng)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.draws += 1;
        self.rng.random::<f64>() < p
    }

    /// `k` distinct indices from [0, d), via a partial Fisher-Yates shuffle.
    /// Counts as one logical draw.
    pub fn choose_without_replacement(&mut self, d: usize, k: usize) -> Vec<usize> {
        debug_assert!(k <= d);
        self.draws += 1;
        let mut pool: Vec<usize> = (0..d).collect();
        for i in 0..k {
            let j = self.rng.random_range(i..d);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_label_reproduces() {
        let mut a = RngStream::new(7, "worker/0/oracle");
        let mut b = RngStream::new(7, "worker/0/oracle");
        for _ in 0..100 {
            assert_eq!(a.normal(), b.normal());
        }
        assert_eq!(a.draw_index(), b.draw_index());
    }

    #[test]
    fn distinct_labels_diverge() {
        let mut a = RngStream::new(7, "worker/0/oracle");
        let mut b = RngStream::new(7, "worker/1/oracle");
        let va: Vec<f64> = (0..8).map(|_| a.uniform()).collect();
        let vb: Vec<f64> = (0..8).map(|_| b.uniform()).collect();
        assert_ne!(va, vb);
    }

    #[test]
    fn without_replacement_is_distinct_and_in_range() {
        let mut s = RngStream::new(3, "t");
        for _ in 0..50 {
            let mut picks = s.choose_without_replacement(10, 4);
            picks.sort_unstable();
            picks.dedup();
            assert_eq!(picks.len(), 4);
            assert!(picks.iter().all(|&i| i < 10));
        }
    }
}
