use num_complex::Complex64;

use super::field::SpectralField;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Coefficient-wise product `û_k ↦ m(ξ_k) û_k`.
pub fn apply_multiplier(f: &SpectralField, m: impl Fn(&[f64]) -> Complex64) -> SpectralField {
    let grid = f.grid().clone();
    let dim = grid.dim();
    let mut xi = [0.0f64; 3];
    f.map_coeffs(|idx, c| {
        let ij = grid.unravel(idx);
        for a in 0..dim {
            xi[a] = grid.xi_axis(a)[ij[a]];
        }
        m(&xi[..dim]) * c
    })
}

/// Δu, multiplier −|ξ|².
pub fn laplacian(f: &SpectralField) -> SpectralField {
    let ksq = f.grid().ksq().to_vec();
    f.map_coeffs(|i, c| -ksq[i] * c)
}

/// ∂^α u with multiplier ∏ (iξ_a)^{α_a}; the Nyquist mode of an axis with odd
/// order is zeroed.
pub fn derivative(f: &SpectralField, alpha: &[u8]) -> SpectralField {
    let grid = f.grid().clone();
    if alpha.iter().all(|&a| a == 0) {
        return f.clone();
    }
    // Per-axis multiplier tables.
    let tables: Vec<Vec<Complex64>> = alpha
        .iter()
        .enumerate()
        .map(|(a, &ord)| {
            grid.xi_axis(a)
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    if ord % 2 == 1 && grid.is_nyquist(a, i) {
                        ZERO
                    } else {
                        Complex64::new(0.0, x).powu(ord as u32)
                    }
                })
                .collect()
        })
        .collect();
    f.map_coeffs(|idx, c| {
        let ij = grid.unravel(idx);
        let mut m = Complex64::new(1.0, 0.0);
        for (a, t) in tables.iter().enumerate() {
            m *= t[ij[a]];
        }
        m * c
    })
}

/// Components ∂_j u, j = 0..dim.
pub fn gradient(f: &SpectralField) -> Vec<SpectralField> {
    let dim = f.grid().dim();
    (0..dim)
        .map(|j| {
            let mut alpha = vec![0u8; dim];
            alpha[j] = 1;
            derivative(f, &alpha)
        })
        .collect()
}

/// `‖⟨∇⟩^s f‖_{L²}` with `⟨∇⟩^s = (1+|ξ|²)^{s/2}` under the mean measure.
pub fn sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    f.grid()
        .ksq()
        .iter()
        .zip(f.coeffs())
        .map(|(&q, c)| (1.0 + q).powf(s) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Physical-space product of `fs`, conjugating the flagged factors.
///
/// With `dealias`, every factor and the result are restricted to the 2/3 band.
pub fn pointwise_product(
    fs: &[&SpectralField],
    conj_flags: &[bool],
    dealias: bool,
) -> Result<SpectralField> {
    let first = fs
        .first()
        .ok_or_else(|| Error::invalid("fields", "empty product"))?;
    if conj_flags.len() != fs.len() {
        return Err(Error::invalid(
            "conj_flags",
            format!("{} flags for {} fields", conj_flags.len(), fs.len()),
        ));
    }
    for f in &fs[1..] {
        first.check_grid(f)?;
    }
    let grid = first.grid().clone();
    let mut acc = vec![Complex64::new(1.0, 0.0); grid.total()];
    for (f, &cj) in fs.iter().zip(conj_flags) {
        let samples = if dealias {
            f.dealiased().to_physical()
        } else {
            f.to_physical()
        };
        for (a, s) in acc.iter_mut().zip(samples) {
            *a *= if cj { s.conj() } else { s };
        }
    }
    let out = SpectralField::from_samples(&grid, &acc)?;
    Ok(if dealias { out.dealiased() } else { out })
}

/// ∫ f under the mean measure, i.e. the zero mode.
pub fn integral(f: &SpectralField) -> Complex64 {
    f.coeffs()[0]
}

/// `Σ_k f̂_k conj(ĝ_k)`.
pub fn l2_inner(f: &SpectralField, g: &SpectralField) -> Result<Complex64> {
    f.check_grid(g)?;
    Ok(f.coeffs()
        .iter()
        .zip(g.coeffs())
        .map(|(a, b)| a * b.conj())
        .sum())
}

pub fn mass(f: &SpectralField) -> f64 {
    f.coeffs().iter().map(|c| c.norm_sqr()).sum()
}

/// `Σ |ξ|² |û|²`, the spectral form of ∫|∇u|².
pub fn gradient_energy(f: &SpectralField) -> f64 {
    f.grid()
        .ksq()
        .iter()
        .zip(f.coeffs())
        .map(|(&q, c)| q * c.norm_sqr())
        .sum()
}

/// Conserved energy ∫ (|∇u|² + 2|u|^{p+1}/(p+1)).
pub fn hamiltonian(f: &SpectralField, p: f64) -> f64 {
    let samples = f.to_physical();
    let potential = samples
        .iter()
        .map(|s| s.norm_sqr().powf((p + 1.0) / 2.0))
        .sum::<f64>()
        / samples.len() as f64;
    gradient_energy(f) + 2.0 * potential / (p + 1.0)
}

/// Grid mean of physical samples.
pub fn mean(samples: &[Complex64]) -> Complex64 {
    samples.iter().sum::<Complex64>() / samples.len() as f64
}

/// Grid mean of real physical values.
pub fn mean_real(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
