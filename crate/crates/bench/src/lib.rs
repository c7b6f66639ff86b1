//! Deterministic inputs shared by the benchmarks.

use ergophase_core::fixtures::{random_state, random_system, RandomSystem};
use ergophase_core::StateVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A random system of dimension `dim` and a preparation state, fixed per `dim`.
pub fn problem(dim: usize) -> (RandomSystem, StateVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xbe0c_0000 + dim as u64);
    let sys = random_system(&mut rng, dim);
    let a = random_state(&mut rng, dim, "a");
    (sys, a)
}

/// `n` evenly spaced times on `[0, t_end]`.
pub fn grid(n: usize, t_end: f64) -> Vec<f64> {
    (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect()
}
