//! Counter-based seeded randomness for stochastic gradient oracles. The same
//! (seed, counter) pair always yields the same sample, so runs replay exactly
//! regardless of thread schedule.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradientStream {
    pub seed: u64,
    pub counter: u64,
}

impl GradientStream {
    pub fn new(seed: u64) -> Self {
        GradientStream { seed, counter: 0 }
    }

    /// RNG for the current draw; advances the counter.
    pub fn next_rng(&mut self) -> ChaCha8Rng {
        let rng = Self::rng_at(self.seed, self.counter);
        self.counter += 1;
        rng
    }

    pub fn rng_at(seed: u64, counter: u64) -> ChaCha8Rng {
        let mut bytes = [0u8; 32];
        bytes[0..8].copy_from_slice(&seed.to_le_bytes());
        bytes[8..16].copy_from_slice(&counter.to_le_bytes());
        bytes[16..24].copy_from_slice(&seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).to_le_bytes());
        bytes[24..32].copy_from_slice(&counter.wrapping_mul(0xBF58_476D_1CE4_E5B9).to_le_bytes());
        ChaCha8Rng::from_seed(bytes)
    }
}
