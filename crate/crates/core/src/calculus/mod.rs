//! Exact polynomial calculus in `u`, `ū` and their spatial derivatives.
//!
//! Time derivatives are eliminated through the equation
//! `∂_t u = iΔu − i u^{n+1}ū^n` (`p = 2n+1`), so every `∂_t` becomes spatial.
//! Coefficients are Gaussian rationals; floats appear only in [`evaluate`]
//! and [`integrate`].

mod eval;
mod expr;
mod ibp;
mod time;

pub use eval::{evaluate, integrate, Evaluator};
pub use expr::{coeff, i_pow, imag, rat, real, to_c64, Coeff, Factor, Monomial, SymExpr};
pub use ibp::ibp_normal_form;
pub use time::{
    density, density_power, dt_power, laplacian_power, nonlinearity_expr, time_derivative,
    time_derivative_capped, time_derivatives, ORDER_CAP, POWER_CAP,
};

use crate::error::Result;

/// Normal-form integrand of d/dt ∫ integrand.
pub fn dt_of_functional(integrand: &SymExpr, p: f64) -> Result<SymExpr> {
    Ok(ibp_normal_form(&time_derivative(integrand, p)?))
}

/// `Σ_j ∂_j f · ∂_j g`.
pub fn grad_dot(f: &SymExpr, g: &SymExpr) -> SymExpr {
    (0..f.dim()).fold(SymExpr::zero(f.dim()), |acc, j| {
        acc.add(&f.d_space(j).mul(&g.d_space(j)))
    })
}

/// Mass density `|u|²`.
pub fn mass_integrand(dim: usize) -> SymExpr {
    density(dim)
}

/// Conserved energy density `|∇u|² + 2|u|^{p+1}/(p+1)` for odd integer `p`.
pub fn hamiltonian_integrand(p: f64, dim: usize) -> Result<SymExpr> {
    let n = nonlinearity_expr(p, dim)?.terms().next().expect("one term").0.counts().1;
    let u = SymExpr::u(dim);
    let potential = density_power(dim, n + 1).scale(&real(1, n as i64 + 1));
    Ok(grad_dot(&u, &u.conj()).add(&potential))
}

#[cfg(test)]
mod tests;
