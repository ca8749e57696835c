//! Seed derivation.
//!
//! Every generated item gets its own 64-bit seed, folded from a master seed
//! and a list of integer coordinates (spec index, instance index, split
//! stream, ...) with the SplitMix64 finalizer:
//!
//! ```text
//! h0 = mix(master)
//! hi = mix(h(i-1) XOR coord_i)
//! ```
//!
//! The function only uses wrapping integer arithmetic, so derived seeds are
//! identical on every platform. Items are then sampled from a ChaCha8 stream
//! seeded with the derived value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
pub fn mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `coords` into `master`.
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(mix(master), |h, &c| mix(h ^ c))
}

/// Portable RNG used by all generators.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
