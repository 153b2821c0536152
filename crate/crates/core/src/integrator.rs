//! Time stepping for `i∂_t u + Δu = |u|^{p−1}u` on the torus.
//!
//! Two integrators are provided: Strang splitting (exact linear flow in
//! Fourier space, exact nonlinear phase rotation in physical space) and a
//! Lawson-type integrating-factor RK4 used as a reference.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{pointwise_product, Grid, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorKind {
    Strang,
    Rk4,
}

/// Equation and stepping parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NlsParams {
    pub dim: usize,
    pub p: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_true")]
    pub dealias: bool,
    #[serde(default = "default_integrator")]
    pub integrator: IntegratorKind,
    /// Skip the (dim, p) regime check for exploratory runs.
    #[serde(default)]
    pub allow_any_regime: bool,
}

fn default_true() -> bool {
    true
}

fn default_integrator() -> IntegratorKind {
    IntegratorKind::Strang
}

/// Which of the three covered (dim, p) regimes a parameter set falls in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// d = 2, p = 2n+1 ≥ 3.
    PlanarOdd,
    /// d = 3, p = 3.
    CubicSpatial,
    /// d = 3, 2 < p < 3.
    SubCubicSpatial,
}

/// `Some(n)` when `p = 2n+1` with `n ≥ 1`.
pub fn odd_power_index(p: f64) -> Option<usize> {
    if p >= 3.0 && p.fract() == 0.0 && (p as i64) % 2 == 1 && p < 1e6 {
        Some(((p as i64 - 1) / 2) as usize)
    } else {
        None
    }
}

impl NlsParams {
    pub fn new(dim: usize, p: f64, dt: f64, t_end: f64) -> Self {
        NlsParams {
            dim,
            p,
            dt,
            t_end,
            dealias: true,
            integrator: IntegratorKind::Strang,
            allow_any_regime: false,
        }
    }

    pub fn with_integrator(mut self, kind: IntegratorKind) -> Self {
        self.integrator = kind;
        self
    }

    pub fn with_dealias(mut self, dealias: bool) -> Self {
        self.dealias = dealias;
        self
    }

    pub fn regime(&self) -> Option<Regime> {
        match self.dim {
            2 if odd_power_index(self.p).is_some() => Some(Regime::PlanarOdd),
            3 if self.p == 3.0 => Some(Regime::CubicSpatial),
            3 if self.p > 2.0 && self.p < 3.0 => Some(Regime::SubCubicSpatial),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("params.dt", format!("{} must be > 0", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::invalid("params.t_end", format!("{} must be >= 0", self.t_end)));
        }
        if self.t_end > 0.0 && self.t_end < self.dt {
            return Err(Error::invalid("params.t_end", "must be 0 or at least dt"));
        }
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(Error::invalid("params.p", format!("{} must be > 1", self.p)));
        }
        if !(1..=3).contains(&self.dim) {
            return Err(Error::invalid("params.dim", format!("{} not in 1..=3", self.dim)));
        }
        if !self.allow_any_regime && self.regime().is_none() {
            return Err(Error::invalid(
                "params.p",
                format!(
                    "(dim, p) = ({}, {}) is outside the supported regimes \
                     (2, odd p >= 3), (3, 3), (3, 2 < p < 3); set allow_any_regime to override",
                    self.dim, self.p
                ),
            ));
        }
        Ok(())
    }

    /// Number of steps to reach `t_end`.
    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }
}

/// Physical-space `|u|^{p−1} u`.
fn nonlinearity(u: &SpectralField, p: f64, dealias: bool) -> Result<SpectralField> {
    if p == 3.0 {
        return pointwise_product(&[u, u, u], &[false, false, true], dealias);
    }
    let src = if dealias { u.dealiased() } else { u.clone() };
    let samples: Vec<Complex64> = src
        .to_physical()
        .into_iter()
        .map(|v| v * v.norm_sqr().powf((p - 1.0) / 2.0))
        .collect();
    let out = SpectralField::from_samples(u.grid(), &samples)?;
    Ok(if dealias { out.dealiased() } else { out })
}

/// ∂_t u = i(Δu − |u|^{p−1}u).
pub fn nls_rhs(u: &SpectralField, params: &NlsParams) -> Result<SpectralField> {
    let n = nonlinearity(u, params.p, params.dealias)?;
    let ksq = u.grid().ksq();
    let nc = n.coeffs();
    Ok(u.map_coeffs(|i, c| Complex64::new(0.0, 1.0) * (-ksq[i] * c - nc[i])))
}

/// Precomputed propagators for a fixed grid and step.
pub struct Stepper {
    grid: Arc<Grid>,
    params: NlsParams,
    dt: f64,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
}

impl Stepper {
    pub fn new(grid: &Arc<Grid>, params: &NlsParams, dt: f64) -> Self {
        let phase = |tau: f64| -> Vec<Complex64> {
            grid.ksq()
                .iter()
                .map(|&q| Complex64::from_polar(1.0, -q * tau))
                .collect()
        };
        Stepper {
            grid: grid.clone(),
            params: params.clone(),
            dt,
            half: phase(dt / 2.0),
            full: phase(dt),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn linear(&self, u: &SpectralField, table: &[Complex64]) -> SpectralField {
        u.map_coeffs(|i, c| table[i] * c)
    }

    /// Strang step: half linear, exact nonlinear phase, half linear.
    pub fn strang(&self, u: &SpectralField) -> Result<SpectralField> {
        u.check_grid_arc(&self.grid)?;
        let v = self.linear(u, &self.half);
        let exponent = (self.params.p - 1.0) / 2.0;
        let samples: Vec<Complex64> = v
            .to_physical()
            .into_iter()
            .map(|s| s * Complex64::from_polar(1.0, -s.norm_sqr().powf(exponent) * self.dt))
            .collect();
        let w = SpectralField::from_samples(&self.grid, &samples)?;
        Ok(self.linear(&w, &self.half))
    }

    fn twisted(&self, u: &SpectralField) -> Result<SpectralField> {
        let n = nonlinearity(u, self.params.p, self.params.dealias)?;
        Ok(n.scale(Complex64::new(0.0, -1.0)))
    }

    /// Lawson RK4 on the integrating-factor form.
    pub fn rk4(&self, u: &SpectralField) -> Result<SpectralField> {
        u.check_grid_arc(&self.grid)?;
        let h = self.dt;
        let e_half = |f: &SpectralField| self.linear(f, &self.half);
        let e_full = |f: &SpectralField| self.linear(f, &self.full);
        let c = |x: f64| Complex64::new(x, 0.0);

        let n1 = self.twisted(u)?;
        let u2 = e_half(&u.axpy(c(h / 2.0), &n1)?);
        let n2 = self.twisted(&u2)?;
        let u3 = e_half(u).axpy(c(h / 2.0), &n2)?;
        let n3 = self.twisted(&u3)?;
        let u4 = e_full(u).axpy(c(h), &e_half(&n3))?;
        let n4 = self.twisted(&u4)?;

        let acc = e_full(&n1)
            .axpy(c(2.0), &e_half(&n2.add(&n3)?))?
            .add(&n4)?;
        e_full(u).axpy(c(h / 6.0), &acc)
    }

    pub fn step(&self, u: &SpectralField) -> Result<SpectralField> {
        match self.params.integrator {
            IntegratorKind::Strang => self.strang(u),
            IntegratorKind::Rk4 => self.rk4(u),
        }
    }
}

impl SpectralField {
    pub(crate) fn check_grid_arc(&self, grid: &Arc<Grid>) -> Result<()> {
        if Arc::ptr_eq(self.grid(), grid) || **self.grid() == **grid {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{} vs {}",
                self.grid().spec(),
                grid.spec()
            )))
        }
    }
}

/// One Strang step of size `dt` (negative `dt` runs backwards).
pub fn step_strang(u: &SpectralField, dt: f64, params: &NlsParams) -> Result<SpectralField> {
    Stepper::new(u.grid(), params, dt).strang(u)
}

/// One integrating-factor RK4 step of size `dt`.
pub fn step_rk4(u: &SpectralField, dt: f64, params: &NlsParams) -> Result<SpectralField> {
    Stepper::new(u.grid(), params, dt).rk4(u)
}

/// Stored states of a run.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub samples: Vec<(f64, SpectralField)>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|(t, _)| *t).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&(f64, SpectralField)> {
        self.samples.last()
    }

    /// Time spacing between consecutive samples, if uniform.
    pub fn spacing(&self) -> Option<f64> {
        if self.samples.len() < 2 {
            return None;
        }
        let h = self.samples[1].0 - self.samples[0].0;
        let uniform = self
            .samples
            .windows(2)
            .all(|w| ((w[1].0 - w[0].0) - h).abs() <= 1e-9 * h.abs());
        uniform.then_some(h)
    }
}

/// How `evolve` reports and stores states.
#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    /// Observers fire (and states are stored) every `cadence_steps` steps.
    pub cadence_steps: u64,
    pub keep_states: bool,
    /// Step index the initial state corresponds to (for resumed runs).
    pub start_step: u64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            cadence_steps: 1,
            keep_states: true,
            start_step: 0,
        }
    }
}

/// Observer callback: `(step, t, state)`.
pub type Observer<'a> = dyn FnMut(u64, f64, &SpectralField) -> Result<()> + 'a;

/// Step from `u0` to `params.t_end`, calling `observer` at the cadence
/// (including the initial and the final state).
pub fn evolve(
    u0: &SpectralField,
    params: &NlsParams,
    options: EvolveOptions,
    observer: &mut Observer<'_>,
) -> Result<Trajectory> {
    params.validate()?;
    if u0.grid().dim() != params.dim {
        return Err(Error::GridMismatch(format!(
            "state is {}-dimensional, params.dim = {}",
            u0.grid().dim(),
            params.dim
        )));
    }
    if options.cadence_steps == 0 {
        return Err(Error::invalid("cadence_steps", "must be >= 1"));
    }
    let stepper = Stepper::new(u0.grid(), params, params.dt);
    let total = params.steps();
    let mut traj = Trajectory::default();
    let mut u = u0.clone();
    let mut step = options.start_step;

    let mut emit = |step: u64, u: &SpectralField, traj: &mut Trajectory| -> Result<()> {
        let t = step as f64 * params.dt;
        if !u.is_finite() {
            return Err(Error::NonFinite { t, step, path: None });
        }
        observer(step, t, u)?;
        if options.keep_states {
            traj.samples.push((t, u.clone()));
        }
        Ok(())
    };

    if options.start_step == 0 {
        emit(step, &u, &mut traj)?;
    }
    while step < total {
        u = stepper.step(&u)?;
        step += 1;
        if step % options.cadence_steps == 0 || step == total {
            emit(step, &u, &mut traj)?;
        }
    }
    Ok(traj)
}

/// Evolve without observers, storing states every `cadence_steps`.
pub fn trajectory(u0: &SpectralField, params: &NlsParams, cadence_steps: u64) -> Result<Trajectory> {
    evolve(
        u0,
        params,
        EvolveOptions {
            cadence_steps,
            ..Default::default()
        },
        &mut |_, _, _| Ok(()),
    )
}
