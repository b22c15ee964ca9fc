//! Seed tree.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by a
//! 64-bit seed derived along a fixed path from the master seed:
//!
//! ```text
//! derive(parent, tag) = splitmix64(parent ^ splitmix64(tag + 0x9E3779B97F4A7C15))
//! ```
//!
//! Trials, datasets, methods and individual samples each fold their own tag
//! in, so any cell of an experiment grid can be recomputed in isolation and
//! serial and parallel runs see the same streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(parent: u64, tag: u64) -> u64 {
    splitmix64(parent ^ splitmix64(tag.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

/// FNV-1a hash of a label, used to turn names (family, method, split) into tags.
pub fn tag(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn derive_named(parent: u64, label: &str) -> u64 {
    derive(parent, tag(label))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
