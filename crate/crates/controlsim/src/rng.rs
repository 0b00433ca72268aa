//! Keyed deterministic random substreams.
//!
//! Every stochastic step derives its own generator from the run seed plus a
//! purpose tag and the ids involved, e.g. `(seed, "noise", unit, outcome)`.
//! Draws therefore never depend on iteration order, and adding a consumer
//! (another outcome, another replication) never perturbs existing streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; the avalanche step behind every key fold.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// A derivation point in the stream tree. `Copy`, cheap, and immutable:
/// folding in a tag or index yields a child key, never mutates the parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        StreamKey(mix(seed ^ 0x6a09_e667_f3bc_c908))
    }

    /// Fold a purpose or id string into the key.
    pub fn tag(self, s: &str) -> Self {
        StreamKey(mix(self.0 ^ fnv1a(s.as_bytes())))
    }

    /// Fold a counter (replication index, time index) into the key.
    pub fn index(self, v: u64) -> Self {
        StreamKey(mix(self.0 ^ v.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x2545_f491_4f6c_dd1d)))
    }

    /// Collapse to a plain seed, for handing to a nested pipeline stage.
    pub fn seed(self) -> u64 {
        self.0
    }

    /// Instantiate the stream at this key.
    pub fn rng(self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            chunk.copy_from_slice(&mix(self.0 ^ (i as u64 + 1)).to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}
