//! Seeded pseudo-random streams. Every stochastic routine takes its
//! generator from the caller; nothing here draws from OS entropy.

use rand::SeedableRng;

pub use rand_xoshiro::SplitMix64;

pub fn seeded(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

/// Independent seed for stream `index` derived from a base seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    // One SplitMix64 finaliser step over the combined value.
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
