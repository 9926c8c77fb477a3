//! Seeded, portable randomness for held-out samples and dataset splits.
//!
//! The generator is SplitMix64 (64-bit state, seeded directly with the
//! user's seed). Bounded draws use rejection sampling: draw `x`, reject
//! while `x >= n * floor(2^64 / n)`, return `x % n`. Shuffles are
//! Fisher–Yates from the last index down. Both are simple enough to
//! reimplement bit-for-bit in any language.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

pub const PRNG_NAME: &str = "splitmix64";

pub struct SeededRng(SplitMix64);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng(SplitMix64::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform integer in `0..n`. `n` must be non-zero.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = n * (u64::MAX / n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    /// `k` distinct indices from `0..n`, in draw order (partial Fisher–Yates).
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot draw {k} of {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}
