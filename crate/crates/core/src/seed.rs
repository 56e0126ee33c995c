//! Seed derivation.
//!
//! Every stochastic stage owns a `ChaCha8Rng` seeded from a `u64`. Stage
//! seeds are derived from one global seed with a splitmix64 finalizer so that
//! neighbouring global seeds still produce unrelated stage streams:
//!
//! ```text
//! stage_seed = splitmix64(global + (stage_index + 1) * 0x9E3779B97F4A7C15)
//! ```
//!
//! Per-task seeds inside a stage (GA runs, CRS resamples) are plain offsets
//! from the stage seed, which keeps them easy to reproduce by hand.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Pipeline stages that draw random numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Synth,
    Select,
    Network,
    Crs,
    Subtype,
    Split,
}

impl Stage {
    fn index(self) -> u64 {
        match self {
            Stage::Synth => 0,
            Stage::Select => 1,
            Stage::Network => 2,
            Stage::Crs => 3,
            Stage::Subtype => 4,
            Stage::Split => 5,
        }
    }
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stage_seed(global: u64, stage: Stage) -> u64 {
    splitmix64(global.wrapping_add((stage.index() + 1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
