//! Seeded, stream-splittable random source.
//!
//! The algorithm is fixed so that manifests are reproducible on every
//! platform and in every release:
//!
//! * Key: the 64-bit seed is expanded with SplitMix64 (Steele, Lea and
//!   Flood, 2014) into four words, written little-endian into a 256-bit
//!   ChaCha key.
//! * Stream: ChaCha with 8 rounds (Bernstein's ChaCha, as implemented by
//!   `rand_chacha::ChaCha8Rng`), with its 64-bit stream id set to the
//!   sub-stream number, usually the epoch index.
//! * Uniform doubles: the top 53 bits of one output word times 2^-53.
//! * Bounded integers: Lemire's multiply-and-reject method on one or more
//!   64-bit words.
//! * Shuffles: Fisher-Yates from the last position down.
//!
//! None of these depend on `rand`'s distribution code, which may change its
//! value stream between versions.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sub-stream reserved for synthetic dataset generation.
pub const SYNTHETIC_STREAM: u64 = u64::MAX;

pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    /// Generator for sub-stream `stream` of `seed`. Different streams of the
    /// same seed are independent; a given `(seed, stream)` always yields the
    /// same sequence.
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(stream);
        Self { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `0..n`. `n` must be nonzero.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let mut m = self.next_u64() as u128 * n as u128;
        if (m as u64) < n {
            let threshold = n.wrapping_neg() % n;
            while (m as u64) < threshold {
                m = self.next_u64() as u128 * n as u128;
            }
        }
        (m >> 64) as u64
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
