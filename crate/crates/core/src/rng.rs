//! Seeded random number generation.
//!
//! Every random quantity in this crate comes from [`ChaCha8Rng`] seeded with a
//! `u64`. Streams are reproducible for a fixed seed within this implementation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type TensorRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> TensorRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn standard_normal(rng: &mut TensorRng) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform sample from the open-ish interval `(-1, 1)`.
pub fn symmetric_uniform(rng: &mut TensorRng) -> f64 {
    rng.random_range(-1.0..1.0)
}

/// Uniformly distributed point on the unit sphere in `R^n`.
pub fn unit_vector(rng: &mut TensorRng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| standard_normal(rng)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}
