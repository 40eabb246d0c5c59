//! Counter-based random streams.
//!
//! A stream is identified by (seed, index). ChaCha20 keyed by the seed and
//! positioned on stream `index` yields the same sequence no matter which
//! thread draws it or in which order trials run.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Stream for sub-task `k` of this stream, e.g. one trial of a parameter.
    pub fn child(&self, k: u64) -> Self {
        Self {
            seed: self.seed,
            stream: self
                .stream
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(k.wrapping_add(1)),
        }
    }
}
