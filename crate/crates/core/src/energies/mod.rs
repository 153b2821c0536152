//! Modified energies and checks of their time-derivative identities.
//!
//! For odd integer `p = 2n+1` with `ρ = |u|²`:
//! - `E_{2k} = ‖∂_t^k u‖² − (p−1)/4 ∫ |∂_t^{k−1}∇ρ|² ρ^{n−1} − ∫ |∂_t^{k−1}(ρ^n u)|²`
//! - `E_3 = ½‖∇∂_t u‖² + ½∫ ρ^n |∂_t u|² + (p−1)/8 ∫ ρ^{n−1} |∂_t ρ|²`
//!
//! and for `2 < p < 3`, with `|u|` regularized to `sqrt(|u|² + ε²)`:
//! - `F_2 = ‖∂_t u‖² − (p−1)∫ |u|^{p−1} |∇|u||² − (p−1)/p ∫ |u|^{2p}`
//!
//! Polynomial energies are assembled from symbolic time derivatives; their
//! identity right-hand sides are the normal forms of the symbolic time
//! derivative of the integrand, built once per (kind, k, p, dim).

mod identity;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::{
    density, density_power, dt_of_functional, dt_power, nonlinearity_expr, real, time_derivatives,
    Evaluator, SymExpr, POWER_CAP,
};
use crate::error::{Error, Result};
use crate::integrator::{nls_rhs, odd_power_index, NlsParams};
use crate::spectral::{derivative, gradient, mass, mean_real, SpectralField};

pub use identity::{identity_check, IdentityReport, WidthResidual};

/// Largest k for which identity right-hand sides are derived.
pub const IDENTITY_K_CAP: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyKind {
    Even,
    Odd,
    F2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySpec {
    pub kind: EnergyKind,
    #[serde(default = "default_k")]
    pub k: usize,
    pub p: f64,
    #[serde(default = "default_eps")]
    pub eps_reg: f64,
}

fn default_k() -> usize {
    1
}

fn default_eps() -> f64 {
    1e-8
}

impl EnergySpec {
    pub fn even(k: usize, p: f64) -> Self {
        EnergySpec {
            kind: EnergyKind::Even,
            k,
            p,
            eps_reg: default_eps(),
        }
    }

    pub fn odd(p: f64) -> Self {
        EnergySpec {
            kind: EnergyKind::Odd,
            k: 1,
            p,
            eps_reg: default_eps(),
        }
    }

    pub fn f2(p: f64) -> Self {
        EnergySpec {
            kind: EnergyKind::F2,
            k: 1,
            p,
            eps_reg: default_eps(),
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps_reg = eps;
        self
    }

    /// Short label such as `E2`, `E3`, `F2`.
    pub fn label(&self) -> String {
        match self.kind {
            EnergyKind::Even => format!("E{}", 2 * self.k),
            EnergyKind::Odd => format!("E{}", 2 * self.k + 1),
            EnergyKind::F2 => "F2".to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            EnergyKind::Even | EnergyKind::Odd => {
                if odd_power_index(self.p).is_none() {
                    return Err(Error::NonPolynomial(self.p));
                }
                if self.k == 0 {
                    return Err(Error::invalid("energy.k", "must be >= 1"));
                }
                if self.kind == EnergyKind::Even && self.k > POWER_CAP {
                    return Err(Error::PowerCap { k: self.k, cap: POWER_CAP });
                }
                if self.kind == EnergyKind::Odd && self.k != 1 {
                    return Err(Error::Unsupported(format!(
                        "odd energy E{} needs correction constants that are only fixed for k = 1",
                        2 * self.k + 1
                    )));
                }
            }
            EnergyKind::F2 => {
                if !(self.p > 2.0 && self.p < 3.0) {
                    return Err(Error::invalid("energy.p", format!("F2 needs 2 < p < 3, got {}", self.p)));
                }
            }
        }
        if !(self.eps_reg.is_finite() && self.eps_reg >= 0.0) {
            return Err(Error::invalid("energy.eps_reg", "must be finite and >= 0"));
        }
        Ok(())
    }

    fn check_kind(&self, kind: EnergyKind) -> Result<()> {
        self.validate()?;
        if self.kind != kind {
            return Err(Error::invalid(
                "energy.kind",
                format!("expected {kind:?}, got {:?}", self.kind),
            ));
        }
        Ok(())
    }
}

/// Symbolic pieces of a polynomial energy, shared read-only.
struct Forms {
    /// `∂_t^k u`.
    w: SymExpr,
    /// Even: `∂_t^{k−1} ∂_j ρ` per axis. Odd: `[∂_t ρ]`.
    xs: Vec<SymExpr>,
    /// Even: `∂_t^{k−1}(ρ^n u)`.
    g: SymExpr,
    integrand: SymExpr,
    rhs: OnceLock<Result<SymExpr, String>>,
}

type FormKey = (EnergyKind, usize, u64, usize);

fn forms(spec: &EnergySpec, dim: usize) -> Result<Arc<Forms>> {
    static CACHE: OnceLock<Mutex<HashMap<FormKey, Arc<Forms>>>> = OnceLock::new();
    let key = (spec.kind, spec.k, spec.p.to_bits(), dim);
    let cache = CACHE.get_or_init(Default::default);
    if let Some(f) = cache.lock().expect("forms cache poisoned").get(&key) {
        return Ok(f.clone());
    }
    let built = Arc::new(match spec.kind {
        EnergyKind::Even => even_forms(spec.k, spec.p, dim)?,
        EnergyKind::Odd => odd_forms(spec.p, dim)?,
        EnergyKind::F2 => return Err(Error::invalid("energy.kind", "F2 has no symbolic form")),
    });
    Ok(cache
        .lock()
        .expect("forms cache poisoned")
        .entry(key)
        .or_insert(built)
        .clone())
}

fn power_n(p: f64) -> Result<usize> {
    odd_power_index(p).ok_or(Error::NonPolynomial(p))
}

fn even_forms(k: usize, p: f64, dim: usize) -> Result<Forms> {
    let n = power_n(p)?;
    let w = dt_power(k, p, dim)?;
    let xs: Vec<SymExpr> = (0..dim)
        .map(|j| Ok(time_derivatives(&density(dim).d_space(j), k - 1, p)?.pop().expect("nonempty")))
        .collect::<Result<_>>()?;
    let g = time_derivatives(&nonlinearity_expr(p, dim)?, k - 1, p)?
        .pop()
        .expect("nonempty");
    let weight = density_power(dim, n - 1);
    let grad = xs
        .iter()
        .fold(SymExpr::zero(dim), |acc, x| acc.add(&x.mul(&x.conj())))
        .mul(&weight)
        .scale(&real(-(p as i64 - 1), 4));
    let integrand = w.mul(&w.conj()).add(&grad).sub(&g.mul(&g.conj()));
    Ok(Forms {
        w,
        xs,
        g,
        integrand,
        rhs: OnceLock::new(),
    })
}

fn odd_forms(p: f64, dim: usize) -> Result<Forms> {
    let n = power_n(p)?;
    let w = dt_power(1, p, dim)?;
    let rho_t = time_derivatives(&density(dim), 1, p)?.pop().expect("nonempty");
    let half = real(1, 2);
    let kinetic = (0..dim)
        .fold(SymExpr::zero(dim), |acc, j| {
            let d = w.d_space(j);
            acc.add(&d.mul(&d.conj()))
        })
        .scale(&half);
    let weighted = density_power(dim, n).mul(&w).mul(&w.conj()).scale(&half);
    let density_term = density_power(dim, n - 1)
        .mul(&rho_t)
        .mul(&rho_t.conj())
        .scale(&real(p as i64 - 1, 8));
    Ok(Forms {
        w,
        xs: vec![rho_t],
        g: SymExpr::zero(dim),
        integrand: kinetic.add(&weighted).add(&density_term),
        rhs: OnceLock::new(),
    })
}

impl Forms {
    fn rhs(&self, p: f64) -> Result<&SymExpr> {
        self.rhs
            .get_or_init(|| dt_of_functional(&self.integrand, p).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::invalid("energy", e.clone()))
    }
}

/// Derivative orders before and after normalizing d/dt of an energy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CancellationReport {
    pub label: String,
    pub k: usize,
    pub p: u32,
    pub dim: usize,
    /// Largest per-factor order in the expanded time derivative.
    pub raw_max_order: usize,
    pub raw_terms: usize,
    /// Largest per-factor order after integration by parts.
    pub normal_form_max_order: usize,
    pub normal_form_terms: usize,
    /// The normal form in text form.
    pub identity: String,
}

pub fn cancellation_report(spec: &EnergySpec, dim: usize) -> Result<CancellationReport> {
    let integrand = energy_integrand(spec, dim)?;
    let raw = crate::calculus::time_derivative(&integrand, spec.p)?;
    let nf = identity_integrand(spec, dim)?;
    Ok(CancellationReport {
        label: spec.label(),
        k: spec.k,
        p: spec.p as u32,
        dim,
        raw_max_order: raw.max_factor_order(),
        raw_terms: raw.len(),
        normal_form_max_order: nf.max_factor_order(),
        normal_form_terms: nf.len(),
        identity: nf.to_string(),
    })
}

/// Symbolic integrand of a polynomial energy.
pub fn energy_integrand(spec: &EnergySpec, dim: usize) -> Result<SymExpr> {
    spec.validate()?;
    if spec.kind == EnergyKind::F2 {
        return Err(Error::Unsupported("F2 is evaluated numerically only".into()));
    }
    Ok(forms(spec, dim)?.integrand.clone())
}

/// Normal-form integrand of the energy's time derivative.
pub fn identity_integrand(spec: &EnergySpec, dim: usize) -> Result<SymExpr> {
    spec.validate()?;
    if spec.kind == EnergyKind::Even && spec.k > IDENTITY_K_CAP {
        return Err(Error::PowerCap { k: spec.k, cap: IDENTITY_K_CAP });
    }
    let f = forms(spec, dim)?;
    Ok(f.rhs(spec.p)?.clone())
}

fn band_density(u: &SpectralField) -> Vec<f64> {
    u.dealiased().to_physical().iter().map(|z| z.norm_sqr()).collect()
}

fn real_samples(f: &SpectralField) -> Vec<f64> {
    f.to_physical().iter().map(|z| z.re).collect()
}

fn even_parts(u: &SpectralField, spec: &EnergySpec) -> Result<(f64, f64)> {
    spec.check_kind(EnergyKind::Even)?;
    let f = forms(spec, u.grid().dim())?;
    let n = power_n(spec.p)?;
    let mut ev = Evaluator::new(u);
    let kinetic = mass(&ev.evaluate(&f.w)?);
    let rho = band_density(u);
    let mut grad = vec![0.0; rho.len()];
    for x in &f.xs {
        let xs = real_samples(&ev.evaluate(x)?);
        grad.iter_mut().zip(&xs).for_each(|(a, b)| *a += b * b);
    }
    let weighted: Vec<f64> = grad
        .iter()
        .zip(&rho)
        .map(|(g, r)| g * r.powi(n as i32 - 1))
        .collect();
    let residual = -(spec.p - 1.0) / 4.0 * mean_real(&weighted) - mass(&ev.evaluate(&f.g)?);
    Ok((kinetic, residual))
}

/// `E_{2k}(u)`.
pub fn energy_even(u: &SpectralField, spec: &EnergySpec) -> Result<f64> {
    let (a, b) = even_parts(u, spec)?;
    Ok(a + b)
}

/// `R_{2k}(u) = E_{2k}(u) − ‖∂_t^k u‖²`.
pub fn residual_r2k(u: &SpectralField, spec: &EnergySpec) -> Result<f64> {
    Ok(even_parts(u, spec)?.1)
}

/// `‖∂_t^k u‖²` with `∂_t^k u` realized symbolically.
pub fn dt_power_norm_sq(u: &SpectralField, k: usize, p: f64) -> Result<f64> {
    Ok(mass(&Evaluator::new(u).evaluate(&dt_power(k, p, u.grid().dim())?)?))
}

/// `E_3(u)`.
pub fn energy_odd(u: &SpectralField, spec: &EnergySpec) -> Result<f64> {
    spec.check_kind(EnergyKind::Odd)?;
    let dim = u.grid().dim();
    let f = forms(spec, dim)?;
    let n = power_n(spec.p)?;
    let mut ev = Evaluator::new(u);
    let w = ev.evaluate(&f.w)?;
    let mut kinetic = 0.0;
    for j in 0..dim {
        let mut alpha = vec![0u8; dim];
        alpha[j] = 1;
        kinetic += mass(&derivative(&w, &alpha));
    }
    let rho = band_density(u);
    let ws = w.to_physical();
    let rho_t = real_samples(&ev.evaluate(&f.xs[0])?);
    let weighted: Vec<f64> = rho
        .iter()
        .zip(&ws)
        .map(|(r, w)| r.powi(n as i32) * w.norm_sqr())
        .collect();
    let density_term: Vec<f64> = rho
        .iter()
        .zip(&rho_t)
        .map(|(r, t)| r.powi(n as i32 - 1) * t * t)
        .collect();
    Ok(0.5 * kinetic + 0.5 * mean_real(&weighted) + (spec.p - 1.0) / 8.0 * mean_real(&density_term))
}

/// Pointwise quantities shared by the sub-cubic energy and its identity.
struct SubCubic {
    r: Vec<f64>,
    grad_r_sq: Vec<f64>,
    grad_u_sq: Vec<f64>,
    r_t: Vec<f64>,
    kinetic: f64,
}

fn sub_cubic(u: &SpectralField, spec: &EnergySpec) -> Result<SubCubic> {
    spec.check_kind(EnergyKind::F2)?;
    let dim = u.grid().dim();
    let params = NlsParams::new(dim, spec.p, 1.0, 0.0);
    let w = nls_rhs(u, &params)?;
    let us = u.to_physical();
    let ws = w.to_physical();
    let grads: Vec<Vec<Complex64>> = gradient(u).iter().map(|g| g.to_physical()).collect();
    let eps2 = spec.eps_reg * spec.eps_reg;
    let total = us.len();
    let mut out = SubCubic {
        r: Vec::with_capacity(total),
        grad_r_sq: Vec::with_capacity(total),
        grad_u_sq: Vec::with_capacity(total),
        r_t: Vec::with_capacity(total),
        kinetic: mass(&w),
    };
    for i in 0..total {
        let z = us[i];
        let r = (z.norm_sqr() + eps2).sqrt();
        let mut gr = 0.0;
        let mut gu = 0.0;
        for g in &grads {
            let d = (z.conj() * g[i]).re / r;
            gr += d * d;
            gu += g[i].norm_sqr();
        }
        out.r.push(r);
        out.grad_r_sq.push(gr);
        out.grad_u_sq.push(gu);
        out.r_t.push(if r > 0.0 { (z.conj() * ws[i]).re / r } else { 0.0 });
    }
    Ok(out)
}

/// `F_2(u)`; `|u|` is regularized by `eps_reg`.
pub fn energy_f2(u: &SpectralField, spec: &EnergySpec) -> Result<f64> {
    let s = sub_cubic(u, spec)?;
    let p = spec.p;
    let grad: Vec<f64> = s.r.iter().zip(&s.grad_r_sq).map(|(r, g)| r.powf(p - 1.0) * g).collect();
    let pot: Vec<f64> = s.r.iter().map(|r| r.powf(2.0 * p)).collect();
    Ok(s.kinetic - (p - 1.0) * mean_real(&grad) - (p - 1.0) / p * mean_real(&pot))
}

/// `(p−1)(p−3)∫|u|^{p−2} ∂_t|u| |∇|u||² + 2(p−1)∫|u|^{p−2} ∂_t|u| |∇u|²`.
pub fn f2_rhs(u: &SpectralField, spec: &EnergySpec) -> Result<f64> {
    let s = sub_cubic(u, spec)?;
    let p = spec.p;
    let vals: Vec<f64> = (0..s.r.len())
        .map(|i| {
            let base = s.r[i].powf(p - 2.0) * s.r_t[i];
            base * ((p - 1.0) * (p - 3.0) * s.grad_r_sq[i] + 2.0 * (p - 1.0) * s.grad_u_sq[i])
        })
        .collect();
    Ok(mean_real(&vals))
}

fn symbolic_rhs(u: &SpectralField, spec: &EnergySpec, kind: EnergyKind) -> Result<Complex64> {
    spec.check_kind(kind)?;
    if spec.k > IDENTITY_K_CAP {
        return Err(Error::PowerCap { k: spec.k, cap: IDENTITY_K_CAP });
    }
    let f = forms(spec, u.grid().dim())?;
    Evaluator::new(u).integrate(f.rhs(spec.p)?)
}

/// d/dt E_{2k} from the symbolic identity; the imaginary part is discarded.
pub fn even_identity_rhs(u: &SpectralField, spec: &EnergySpec) -> Result<f64> {
    Ok(symbolic_rhs(u, spec, EnergyKind::Even)?.re)
}

/// d/dt E_3 from the symbolic identity.
pub fn odd_identity_rhs(u: &SpectralField, spec: &EnergySpec) -> Result<f64> {
    Ok(symbolic_rhs(u, spec, EnergyKind::Odd)?.re)
}

/// The energy selected by `spec`.
pub fn energy(u: &SpectralField, spec: &EnergySpec) -> Result<f64> {
    match spec.kind {
        EnergyKind::Even => energy_even(u, spec),
        EnergyKind::Odd => energy_odd(u, spec),
        EnergyKind::F2 => energy_f2(u, spec),
    }
}

/// The identity right-hand side selected by `spec`.
pub fn identity_rhs(u: &SpectralField, spec: &EnergySpec) -> Result<f64> {
    match spec.kind {
        EnergyKind::Even => even_identity_rhs(u, spec),
        EnergyKind::Odd => odd_identity_rhs(u, spec),
        EnergyKind::F2 => f2_rhs(u, spec),
    }
}
