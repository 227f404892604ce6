use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::scalar::{sc, Scalar};

/// Deterministic counter-based random source.
///
/// A 64-bit seed fully determines the stream, and [`Rng::substream`] derives
/// statistically independent streams from the same seed — data sampling,
/// dropout masks, random summaries, and parameter init each get their own so
/// that toggling one consumer never perturbs the others.
pub struct Rng {
    inner: ChaCha8Rng,
    /// Cached second output of the Box-Muller transform.
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn seeded(seed: u64) -> Self {
        Rng {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    /// Independent stream `label` under `seed`. Distinct labels give streams
    /// that never collide for any practical draw count.
    pub fn substream(seed: u64, label: u64) -> Self {
        // splitmix64 finalizer over (seed, label) so adjacent labels land far
        // apart in seed space.
        let mut z = seed ^ label.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        Rng::seeded(z)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `[0, n)`. Rejection-sampled, so exactly uniform.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0) is meaningless");
        let n = n as u64;
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    /// Uniform integer in `[lo, hi]` (inclusive).
    pub fn range_inclusive(&mut self, lo: usize, hi: usize) -> usize {
        assert!(lo <= hi, "empty range {lo}..={hi}");
        lo + self.below(hi - lo + 1)
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // u1 in (0, 1] so the log is finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// Fill a slice with uniform draws from `[lo, hi)`.
    pub fn fill_uniform<S: Scalar>(&mut self, out: &mut [S], lo: f64, hi: f64) {
        for v in out {
            *v = sc(self.uniform_in(lo, hi));
        }
    }
}

/// Stream labels used across the crate. Centralized so no two consumers ever
/// share a stream by accident.
pub mod streams {
    pub const INIT: u64 = 1;
    pub const DATA: u64 = 2;
    pub const DROPOUT: u64 = 3;
    pub const RANDOM_SUMMARY: u64 = 4;
    pub const SYNTH: u64 = 5;
    pub const GRADCHECK: u64 = 6;
    pub const SPLIT: u64 = 7;
}
