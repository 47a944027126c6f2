//! Keyed random streams.
//!
//! Every random decision draws from a stream addressed by
//! `(experiment seed, loop index, purpose, item index)`. Streams are
//! independent of one another and of scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. The discriminant is part of the stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Split = 1,
    StartingBudget = 2,
    Query = 3,
    Noise = 4,
    Bootstrap = 5,
    Subsample = 6,
    Dataset = 7,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub loop_index: u64,
    pub purpose: Purpose,
    pub index: u64,
}

impl StreamKey {
    pub fn new(seed: u64, loop_index: u64, purpose: Purpose, index: u64) -> Self {
        Self {
            seed,
            loop_index,
            purpose,
            index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.loop_index.to_le_bytes());
        key[16..24].copy_from_slice(&(self.purpose as u64).to_le_bytes());
        key[24..32].copy_from_slice(&self.index.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }
}

pub fn stream(seed: u64, loop_index: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    StreamKey::new(seed, loop_index, purpose, index).rng()
}
