//! Deterministic seed derivation for reproducible parallel runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a path of indices (iteration, configuration size, restart, ...).
pub(crate) fn derive(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(base), |h, &p| splitmix64(h ^ splitmix64(p)))
}

pub(crate) fn rng(base: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, path))
}
