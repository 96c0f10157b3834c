//! Seed derivation.
//!
//! Every random stream in an episode is derived from one root seed by
//! folding stream tags through the SplitMix64 finaliser:
//!
//! ```text
//! derive(seed, tag) = splitmix64(seed ^ splitmix64(tag))
//! ```
//!
//! An episode seeded with `s` uses:
//!
//! | stream            | seed                                     |
//! |-------------------|------------------------------------------|
//! | environment       | `derive(s, ENVIRONMENT)`                 |
//! | placement/heading | `derive(s, PLACEMENT)`                   |
//! | step schedule     | `derive(s, SCHEDULE)`                    |
//! | agent `i`         | `derive(derive(s, AGENT), i)`            |
//!
//! Each stream seeds a `ChaCha8Rng`. Because agent streams are keyed by id,
//! adding agents never perturbs the streams of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const ENVIRONMENT: u64 = 0x454e_5649;
pub const PLACEMENT: u64 = 0x504c_4143;
pub const SCHEDULE: u64 = 0x5343_4844;
pub const AGENT: u64 = 0x4147_4e54;
pub const EPISODE: u64 = 0x4550_4953;

/// SplitMix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag))
}

pub fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, tag))
}

pub fn agent_stream(seed: u64, agent: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(derive(seed, AGENT), agent as u64))
}

/// Seed of one batch episode, keyed by its matrix coordinates.
///
/// Coordinates are folded in a fixed order, so an episode's seed depends only
/// on its own indices and never on the size of the surrounding matrix.
pub fn episode_seed(
    root: u64,
    ratio_index: usize,
    kind_index: usize,
    repetition: usize,
    malicious_index: usize,
) -> u64 {
    [ratio_index, kind_index, repetition, malicious_index]
        .iter()
        .fold(derive(root, EPISODE), |acc, &i| derive(acc, i as u64))
}
