//! Stable seed derivation.
//!
//! Seeds are mixed with SplitMix64 and labels hashed with FNV-1a, so
//! derived streams do not depend on the platform or the std hasher.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Seed for the stage named `label` under a global seed.
pub fn derive(global: u64, label: &str) -> u64 {
    splitmix64(global ^ splitmix64(fnv1a(label.as_bytes())))
}

/// Seed for one item of a keyed stream, e.g. one instance idx.
pub fn keyed(seed: u64, key: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ key.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn keyed_rng(seed: u64, key: u64) -> ChaCha8Rng {
    rng(keyed(seed, key))
}
