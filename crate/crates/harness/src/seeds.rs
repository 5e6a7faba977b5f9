//! Named-stream seed management.
//!
//! Every source of randomness in an experiment draws from its own stream
//! derived from the single base seed, so adding a strategy or reordering
//! work never perturbs another consumer's draws.

use cwss_core::sampling;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct SeedSplitter {
    base: u64,
}

impl SeedSplitter {
    pub fn new(base: u64) -> Self {
        Self { base }
    }

    pub fn seed(&self, stream: &str) -> u64 {
        sampling::derive_seed(self.base, stream, 0)
    }

    pub fn seed_at(&self, stream: &str, index: u64) -> u64 {
        sampling::derive_seed(self.base, stream, index)
    }

    pub fn rng(&self, stream: &str) -> ChaCha8Rng {
        sampling::stream_rng(self.base, stream, 0)
    }

    pub fn rng_at(&self, stream: &str, index: u64) -> ChaCha8Rng {
        sampling::stream_rng(self.base, stream, index)
    }
}
