//! Pseudospectral simulation of the defocusing nonlinear Schrödinger equation
//! `i∂_t u + Δu = |u|^{p−1}u` on flat tori, together with an exact symbolic
//! calculus of time derivatives used to build and check modified energies.
//!
//! Layout:
//! - [`spectral`]: grids, transforms, multipliers, Sobolev norms, products.
//! - [`integrator`]: Strang and integrating-factor RK4 stepping.
//! - [`calculus`]: Gaussian-rational polynomial expressions in `u`, `ū` and
//!   their spatial derivatives; time derivatives via the equation;
//!   integration-by-parts normal forms; grid evaluation.
//! - [`energies`]: modified energies and identity checks.
//! - [`lab`]: initial data, persisted runs, growth fits, probes and
//!   convergence studies.

pub mod calculus;
pub mod energies;
pub mod error;
pub mod integrator;
pub mod lab;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};

#[cfg(test)]
pub(crate) mod test_util {
    use std::sync::Arc;

    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::spectral::{Grid, SpectralField};

    /// Random coefficients in the 2/3 band with mild algebraic decay.
    pub fn random_field(grid: &Arc<Grid>, seed: u64, amp: f64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mask = grid.dealias_mask().to_vec();
        let ksq = grid.ksq().to_vec();
        SpectralField::zeros(grid).map_coeffs(|i, _| {
            let re: f64 = rng.random_range(-1.0..1.0);
            let im: f64 = rng.random_range(-1.0..1.0);
            if mask[i] {
                amp * Complex64::new(re, im) / (1.0 + ksq[i])
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Smooth random data with content in |k_j| ≤ 2, resampled onto `grid`,
    /// so that low-degree products are resolved exactly.
    pub fn resolved_field(grid: &Arc<Grid>, seed: u64, amp: f64) -> SpectralField {
        let coarse = Grid::new(crate::spectral::GridSpec::cube(grid.dim(), 8).unwrap()).unwrap();
        smooth_random_field(&coarse, seed, amp).resample(grid).unwrap()
    }

    /// Random coefficients with exponential decay `e^{-|k|}`.
    pub fn smooth_random_field(grid: &Arc<Grid>, seed: u64, amp: f64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mask = grid.dealias_mask().to_vec();
        let ksq = grid.ksq().to_vec();
        SpectralField::zeros(grid).map_coeffs(|i, _| {
            let re: f64 = rng.random_range(-1.0..1.0);
            let im: f64 = rng.random_range(-1.0..1.0);
            if mask[i] {
                amp * Complex64::new(re, im) * (-ksq[i].sqrt()).exp()
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}
