use serde::{Deserialize, Serialize};

use super::init::make_initial;
use super::run::RunConfig;
use crate::energies::{identity_check, EnergySpec, IdentityReport};
use crate::error::{Error, Result};
use crate::integrator::{evolve, trajectory, EvolveOptions};
use crate::spectral::{hamiltonian, mass, Grid};
use crate::stats::linear_fit;

/// Relative drifts at or below this are treated as roundoff.
pub const ROUNDOFF_DRIFT: f64 = 1e-11;

/// Smallest number of step sizes a study accepts.
pub const MIN_LEVELS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Slope {
    /// Least-squares slope of log drift against log dt.
    Fitted { order: f64, r_squared: f64 },
    /// Every drift is at roundoff level; no order is defined.
    Exact { max_drift: f64 },
}

impl Slope {
    pub fn order(&self) -> Option<f64> {
        match self {
            Slope::Fitted { order, .. } => Some(*order),
            Slope::Exact { .. } => None,
        }
    }

    fn of(dts: &[f64], drifts: &[f64]) -> Slope {
        let max_drift = drifts.iter().cloned().fold(0.0, f64::max);
        if max_drift <= ROUNDOFF_DRIFT || drifts.contains(&0.0) {
            return Slope::Exact { max_drift };
        }
        let x: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
        let y: Vec<f64> = drifts.iter().map(|d| d.ln()).collect();
        let (order, _, r_squared, _) = linear_fit(&x, &y);
        Slope::Fitted { order, r_squared }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub dt: f64,
    pub steps: u64,
    /// `max_t |M(t) − M(0)| / M(0)` over every step.
    pub mass_drift: f64,
    /// `max_t |H(t) − H(0)| / |H(0)|` over every step.
    pub hamiltonian_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub t_end: f64,
    pub levels: Vec<Level>,
    pub mass: Slope,
    pub hamiltonian: Slope,
}

fn relative(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        (a - b).abs()
    } else {
        ((a - b) / b).abs()
    }
}

/// Largest conservation drift up to `t_end` for each step size in `dts`, using the
/// grid, datum, integrator and horizon of `config`.
pub fn convergence_study(config: &RunConfig, dts: &[f64]) -> Result<ConvergenceReport> {
    if dts.len() < MIN_LEVELS {
        return Err(Error::InsufficientData(format!(
            "{} refinement levels, need {MIN_LEVELS}",
            dts.len()
        )));
    }
    config.validate()?;
    let grid = Grid::new(config.grid.clone())?;
    let u0 = make_initial(&config.init, &grid)?;
    let p = config.params.p;
    let (m0, h0) = (mass(&u0), hamiltonian(&u0, p));
    let t_end = config.params.t_end;
    let mut levels = Vec::with_capacity(dts.len());
    for &dt in dts {
        let mut params = config.params.clone();
        params.dt = dt;
        params.validate()?;
        let steps = params.steps();
        if ((steps as f64) * dt - t_end).abs() > 1e-9 * t_end.max(1.0) {
            return Err(Error::invalid("dt", format!("{dt} does not divide t_end = {t_end}")));
        }
        let (mut dm, mut dh) = (0.0f64, 0.0f64);
        evolve(
            &u0,
            &params,
            EvolveOptions {
                cadence_steps: 1,
                keep_states: false,
                start_step: 0,
            },
            &mut |_, _, u| {
                dm = dm.max(relative(mass(u), m0));
                dh = dh.max(relative(hamiltonian(u, p), h0));
                Ok(())
            },
        )?;
        levels.push(Level {
            dt,
            steps,
            mass_drift: dm,
            hamiltonian_drift: dh,
        });
    }
    let dts: Vec<f64> = levels.iter().map(|l| l.dt).collect();
    let mass_d: Vec<f64> = levels.iter().map(|l| l.mass_drift).collect();
    let ham_d: Vec<f64> = levels.iter().map(|l| l.hamiltonian_drift).collect();
    Ok(ConvergenceReport {
        t_end,
        mass: Slope::of(&dts, &mass_d),
        hamiltonian: Slope::of(&dts, &ham_d),
        levels,
    })
}

/// Evolve `config` storing every `cadence_steps` state and check the
/// identity of `spec` with the given differencing widths.
pub fn verify_identity(config: &RunConfig, spec: &EnergySpec, widths: &[f64]) -> Result<IdentityReport> {
    config.validate()?;
    if spec.p != config.params.p {
        return Err(Error::invalid(
            "p",
            format!("energy p = {} differs from params.p = {}", spec.p, config.params.p),
        ));
    }
    let grid = Grid::new(config.grid.clone())?;
    let u0 = make_initial(&config.init, &grid)?;
    let traj = trajectory(&u0, &config.params, config.cadence_steps)?;
    identity_check(&traj, spec, widths)
}
