//! Counter-based random streams.
//!
//! Every random draw in the toolkit is addressed by a key derived from the
//! master seed, a purpose tag and a tuple of indices, so the value of a draw
//! never depends on scheduling. Per-index draws (noise, disorder) use a
//! stateless hash of `(key, counter)`; long sequential streams (Monte Carlo)
//! use ChaCha8 keyed the same way, whose word position is the counter saved
//! in checkpoints.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn tag_hash(tag: &str) -> u64 {
    // FNV-1a, then avalanche
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    mix64(h)
}

/// Key of one logical stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey(pub u64);

impl StreamKey {
    pub fn new(seed: u64, tag: &str) -> Self {
        StreamKey(mix64(seed.wrapping_add(GOLDEN) ^ tag_hash(tag)))
    }

    /// Child key for an index (site, round, sample, ...).
    pub fn child(self, index: u64) -> Self {
        StreamKey(mix64(self.0 ^ mix64(index.wrapping_add(GOLDEN).wrapping_mul(GOLDEN))))
    }

    pub fn path(self, indices: &[u64]) -> Self {
        indices.iter().fold(self, |k, &i| k.child(i))
    }

    /// Stateless draw number `counter` of this stream.
    #[inline]
    pub fn u64_at(self, counter: u64) -> u64 {
        mix64(self.0 ^ mix64(counter.wrapping_mul(GOLDEN).wrapping_add(0x632B_E59B_D9B4_E019)))
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform_at(self, counter: u64) -> f64 {
        (self.u64_at(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Bernoulli draw: true with probability `p`.
    #[inline]
    pub fn bernoulli_at(self, counter: u64, p: f64) -> bool {
        self.uniform_at(counter) < p
    }

    pub fn stream(self) -> McRng {
        McRng::new(self)
    }
}

/// Sequential stream for Monte Carlo updates.
#[derive(Clone, Debug)]
pub struct McRng {
    key: StreamKey,
    inner: ChaCha8Rng,
}

/// Serializable position of an [`McRng`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub key: u64,
    pub word_pos: u128,
}

impl McRng {
    pub fn new(key: StreamKey) -> Self {
        let mut seed = [0u8; 32];
        for (k, chunk) in seed.chunks_mut(8).enumerate() {
            chunk.copy_from_slice(&key.u64_at(k as u64).to_le_bytes());
        }
        Self { key, inner: ChaCha8Rng::from_seed(seed) }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        // Lemire's multiply-shift with rejection
        let mut m = (self.next_u64() as u128) * (n as u128);
        if (m as u64) < n {
            let threshold = n.wrapping_neg() % n;
            while (m as u64) < threshold {
                m = (self.next_u64() as u128) * (n as u128);
            }
        }
        (m >> 64) as u64
    }

    pub fn state(&self) -> RngState {
        RngState { key: self.key.0, word_pos: self.inner.get_word_pos() }
    }

    pub fn from_state(state: RngState) -> Self {
        let mut rng = Self::new(StreamKey(state.key));
        rng.inner.set_word_pos(state.word_pos);
        rng
    }
}
