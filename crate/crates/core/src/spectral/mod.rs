//! Torus geometry, spectral transforms, Fourier multipliers, Sobolev norms
//! and dealiased pointwise algebra.

mod field;
mod grid;
mod ops;

pub use field::SpectralField;
pub use grid::{Grid, GridSpec};
pub use ops::{
    apply_multiplier, derivative, gradient, gradient_energy, hamiltonian, integral, l2_inner,
    laplacian, mass, mean, mean_real, pointwise_product, sobolev_norm,
};
