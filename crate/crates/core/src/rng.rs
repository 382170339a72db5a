//! Seeded, stream-addressable randomness.
//!
//! Every unit of Monte-Carlo work (a trial, a resample, a block of truth
//! repetitions) draws from its own stream, addressed by its index, so results
//! never depend on how the work is scheduled.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

// Child seeds are read from this far-away word position so they never overlap
// the draws a caller takes from the parent stream itself.
const CHILD_KEY_WORD_POS: u128 = 1 << 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSource {
    pub seed: u64,
    pub stream: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Independent source for sub-task `index`.
    pub fn substream(&self, index: u64) -> RandomSource {
        let mut rng = self.rng();
        rng.set_word_pos(CHILD_KEY_WORD_POS);
        RandomSource {
            seed: rng.next_u64(),
            stream: index,
        }
    }
}
