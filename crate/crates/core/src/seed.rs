//! Seed derivation for reproducible Monte Carlo runs.
//!
//! Every random quantity is drawn from a [`ChaCha8Rng`] seeded with a 64-bit value.
//! Independent streams (sweep cells, trials) get child seeds derived from the master
//! seed with a SplitMix64 finalizer:
//!
//! ```text
//! child(master, i) = mix(master ^ mix(i + 0x9E3779B97F4A7C15))
//! ```
//!
//! Nested streams chain the rule, e.g. `child(child(master, cell), trial)`. The
//! derivation depends only on the integers involved, so results do not depend on
//! thread scheduling or platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th independent stream below `master`.
pub fn child(master: u64, index: u64) -> u64 {
    mix(master ^ mix(index.wrapping_add(GOLDEN_GAMMA)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
