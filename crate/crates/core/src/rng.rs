//! Reproducible random streams for parallel simulation.
//!
//! Every simulated path owns a ChaCha8 stream. The 256-bit key is expanded
//! from a 64-bit seed, and the path index selects the 64-bit stream id of the
//! ChaCha block counter, so path `i` sees the same numbers regardless of
//! which thread generates it or in which order.
//!
//! Independent experiments sharing one user seed are separated by a family
//! tag that is mixed into the seed with SplitMix64 before key expansion.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PathRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    key_seed: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self { key_seed: seed }
    }

    /// A derived family of streams for a separate experiment.
    pub fn family(&self, tag: u64) -> Self {
        Self {
            key_seed: splitmix64(self.key_seed ^ splitmix64(tag)),
        }
    }

    pub fn stream(&self, index: u64) -> PathRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key_seed);
        rng.set_stream(index);
        rng
    }
}
