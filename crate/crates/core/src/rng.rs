//! Deterministic random streams.
//!
//! A stream is ChaCha12 keyed by `rand_chacha`'s `seed_from_u64` expansion of
//! a 64-bit seed. Uniforms take the top 53 bits of each 64-bit output, so the
//! draw sequence is identical across runs and platforms for a given seed.
//! Independent chains derive their seeds with [`RngStream::split_seed`].

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha12Rng,
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Seed of the `index`-th child stream: `seed ^ splitmix64(index)`.
    pub fn split_seed(seed: u64, index: u64) -> u64 {
        seed ^ splitmix64(index)
    }

    /// Child stream for chain `index`, derived from this stream's seed.
    pub fn split(&self, index: u64) -> RngStream {
        RngStream::new(Self::split_seed(self.seed, index))
    }

    /// Uniform on [0, 1) with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform integer in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index range must be non-empty");
        let i = (self.uniform() * n as f64) as usize;
        i.min(n - 1)
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.inner);
        mean + std * z
    }

    /// Inverse-CDF draw from normalized probabilities.
    ///
    /// Returns the first index whose cumulative sum exceeds the uniform draw;
    /// rounding shortfall falls back to the last index with positive mass.
    pub fn categorical(&mut self, probs: &[f64]) -> usize {
        let u = self.uniform();
        inverse_cdf(probs, u)
    }
}

pub(crate) fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draws() {
        let mut a = RngStream::new(42);
        let mut b = RngStream::new(42);
        for _ in 0..1_000_000 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
    }

    #[test]
    fn different_seeds_differ() {
        let mut a = RngStream::new(1);
        let mut b = RngStream::new(2);
        let same = (0..100).filter(|_| a.uniform() == b.uniform()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn split_streams_are_distinct_and_stable() {
        let root = RngStream::new(7);
        let s0 = RngStream::split_seed(7, 0);
        let s1 = RngStream::split_seed(7, 1);
        assert_ne!(s0, s1);
        assert_eq!(root.split(1).seed(), s1);
    }

    #[test]
    fn uniform_range() {
        let mut r = RngStream::new(3);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn inverse_cdf_ties_and_fallback() {
        assert_eq!(inverse_cdf(&[0.5, 0.5], 0.0), 0);
        assert_eq!(inverse_cdf(&[0.5, 0.5], 0.5), 1);
        assert_eq!(inverse_cdf(&[0.0, 1.0], 0.0), 1);
        // cumulative rounding shortfall
        assert_eq!(inverse_cdf(&[0.3, 0.3, 0.3999999, 0.0], 0.99999999), 2);
    }

    #[test]
    fn categorical_frequencies() {
        let mut r = RngStream::new(11);
        let p = [0.1, 0.2, 0.7];
        let mut counts = [0usize; 3];
        let n = 100_000;
        for _ in 0..n {
            counts[r.categorical(&p)] += 1;
        }
        for (c, &pi) in counts.iter().zip(&p) {
            let f = *c as f64 / n as f64;
            let sd = (pi * (1.0 - pi) / n as f64).sqrt();
            assert!((f - pi).abs() < 5.0 * sd, "{f} vs {pi}");
        }
    }
}
