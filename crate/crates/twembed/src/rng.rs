//! Seeded randomness. Every sampling routine in this crate draws from a
//! [`RandomSource`] so that equal seeds reproduce equal artifacts bit for bit,
//! across platforms.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw from [0, 1).
    pub fn uniform01(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Uniform draw from [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        debug_assert!(lo <= hi);
        lo + (hi - lo) * self.uniform01()
    }

    /// Uniform index from 0..n. Panics if n == 0.
    pub fn pick_index(&mut self, n: usize) -> usize {
        assert!(n > 0, "pick_index over empty range");
        self.rng.gen_range(0..n)
    }

    /// Fresh seed for an independent derived stream.
    pub fn next_seed(&mut self) -> u64 {
        self.rng.gen()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.pick_index(i + 1);
            xs.swap(i, j);
        }
    }
}
