//! Seed derivation.
//!
//! Every random draw in the crate comes from a ChaCha generator whose key is
//! derived from a trajectory seed and a stream index, so results never depend
//! on the order in which trajectories or events are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream index reserved for jump-time sampling inside a trajectory.
pub const SCHEDULE_STREAM: u64 = 0;

/// SplitMix64 finalizer applied to `base` offset by `stream`.
pub fn derive(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the `index`-th jump event of a trajectory.
pub fn event_seed(trajectory_seed: u64, index: usize) -> u64 {
    derive(trajectory_seed, index as u64 + 1)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
