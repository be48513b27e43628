//! Seed plumbing: one root seed, one independent ChaCha stream per stage.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Pipeline stages that draw randomness. The discriminant is the stream id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Synth = 1,
    Sample = 2,
    Train = 3,
    Features = 4,
    Classify = 5,
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stage_rng(root: u64, stage: Stage) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(stage as u64);
    rng
}

/// A 64-bit seed for `stage`, derived from `root`.
pub fn stage_seed(root: u64, stage: Stage) -> u64 {
    stage_rng(root, stage).next_u64()
}
