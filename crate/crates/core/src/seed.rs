use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Seed of a reproducible random stream.
///
/// `(seed, stream_id)` selects one ChaCha8 keystream: the seed keys the
/// cipher and `stream_id` selects the nonce, so distinct stream ids on the
/// same seed are independent. Children derived with [`SeedSpec::child`] get a
/// fresh key mixed from the parent's pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SeedSpec {
    pub seed: u64,
    #[serde(default)]
    pub stream_id: u64,
}

impl SeedSpec {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        SeedSpec { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Stream `index` below this one. Used for Monte Carlo replicates: the
    /// `i`-th replicate always reads `child(i)`, whatever the thread count.
    pub fn child(&self, index: u64) -> SeedSpec {
        SeedSpec {
            seed: splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_add(0x5851_f42d))),
            stream_id: index,
        }
    }

    /// A labelled sibling family, e.g. the inner `x` draws of a nested
    /// estimator versus the outer configuration draws.
    pub fn branch(&self, label: u64) -> SeedSpec {
        SeedSpec {
            seed: splitmix64(self.seed.wrapping_add(splitmix64(label ^ 0xa076_1d64_78bd_642f))),
            stream_id: self.stream_id,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
