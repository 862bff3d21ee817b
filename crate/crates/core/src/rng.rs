//! Seeded random streams.
//!
//! Every stochastic routine in the crate draws from a [`ChaCha8Rng`] so a
//! fixed seed reproduces results bit-for-bit on every platform.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Derives an independent child seed from a parent seed and a stream label.
///
/// SplitMix64 finalizer over the pair; stable across releases.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn standard_normals(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}
