//! Seed derivation and the pinned random generator.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded through
//! `seed_from_u64`. Sub-seeds are derived from a parent seed, a component
//! tag and an index with SplitMix64 mixing, so any stream can be recreated
//! from the master seed alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub const TAG_SYNTH: u64 = 0x5359_4e54_4845_5349; // "SYNTHESI"
pub const TAG_TRIM: u64 = 0x5452_494d_0000_0001;
pub const TAG_SWEEP: u64 = 0x5357_4545_5000_0001;
pub const TAG_TRIAL: u64 = 0x5452_4941_4c00_0001;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable hash of `(seed, tag, index)`.
pub fn derive(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ tag) ^ index)
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
