//! Deterministic random streams.
//!
//! Every random quantity in the crate is drawn from a [`SplitMix64`] stream.
//! Independent streams are obtained with [`substream`], which mixes a child
//! index into the parent seed, so an experiment is reproducible from a single
//! 64-bit master seed in any language that implements SplitMix64.
//!
//! Conventions (these are part of the reproducibility contract):
//!
//! * `next_u64`: the reference SplitMix64 step (increment `0x9E3779B97F4A7C15`,
//!   finalizer constants `0xBF58476D1CE4E5B9` / `0x94D049BB133111EB`).
//! * `next_f64`: `(next_u64() >> 11) * 2^-53`, uniform on `[0, 1)`.
//! * `below(n)`: `(next_u64() as u128 * n as u128) >> 64`, uniform on `0..n`.
//! * `next_gaussian`: Box–Muller cosine branch, `u1 = 1 - next_f64()`,
//!   `u2 = next_f64()`; the sine branch is discarded.
//! * `substream(parent, index)`: the first output of
//!   `SplitMix64::new(parent ^ index.wrapping_mul(0x9E3779B97F4A7C15))`.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// In-place Fisher–Yates shuffle, walking from the last position down.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// Uniform random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }
}

/// Seed of the child stream `index` of `parent`.
pub fn substream(parent: u64, index: u64) -> u64 {
    SplitMix64::new(parent ^ index.wrapping_mul(GOLDEN)).next_u64()
}
