//! Reproducible random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] seeded with a
//! 64-bit value. Child seeds are derived with [`derive_seed`], a SplitMix64
//! finalizer applied to the parent seed and a tag, so the mapping from
//! `(master seed, coordinates)` to a run seed is a pure function.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `tag` under `parent`.
pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ tag.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

/// Folds a sequence of coordinates into one seed, left to right.
pub fn derive_seed_path(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(parent, |s, &t| derive_seed(s, t))
}
