//! Deterministic seed derivation and random test vectors shared by the
//! residual-check modules.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::{lit, Real};

/// Derives an independent, reproducible stream seed from a base seed and a tag.
pub(crate) fn derive_seed(seed: u64, tag: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(tag.wrapping_add(1))
}

pub(crate) fn rng_for(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag))
}

/// Random coefficients in [-1, 1], rejecting vectors of tiny norm so the
/// relative residuals downstream stay well-scaled.
pub(crate) fn random_coords<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    loop {
        let v: Vec<T> = (0..n).map(|_| lit(rng.gen_range(-1.0..1.0))).collect();
        let norm2 = v.iter().fold(T::zero(), |acc, &x| acc + x * x);
        if norm2 > lit::<T>(0.01) {
            return v;
        }
    }
}
