//! Seeded random target generation for reproducible verification sweeps.
//!
//! Randomness flows through a ChaCha8 stream cipher keyed by a `u64` seed,
//! so identical seeds produce identical targets on every platform — a
//! requirement for byte-identical CLI output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::TAU;

use crate::protocol::TargetState;

/// The deterministic generator all randomized paths share.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Eight random phases, uniform on [0, 2π).
pub fn random_phases<R: Rng + ?Sized>(rng: &mut R) -> [f64; 8] {
    std::array::from_fn(|_| rng.random_range(0.0..TAU))
}

/// A random normalized target: amplitudes are |N(0, 1)| draws rescaled to
/// unit square-sum, phases uniform on [0, 2π).
///
/// The amplitude draw is repeated in the (measure-zero) event of an
/// all-zero vector, so the result is always a valid normalized target.
pub fn random_target<R: Rng + ?Sized>(rng: &mut R) -> TargetState {
    loop {
        let mut alphas: [f64; 8] =
            std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal).abs());
        let norm = alphas.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm <= f64::EPSILON {
            continue;
        }
        for a in &mut alphas {
            *a /= norm;
        }
        let phis = random_phases(rng);
        if let Ok(target) = TargetState::new(alphas, phis) {
            return target;
        }
    }
}
