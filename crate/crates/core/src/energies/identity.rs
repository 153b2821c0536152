use serde::{Deserialize, Serialize};

use super::{energy, identity_rhs, EnergySpec};
use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::stats::linear_fit;

/// Central-difference results for one differencing width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthResidual {
    pub h: f64,
    /// `(E(t+h) − E(t−h)) / 2h` at each center time.
    pub lhs: Vec<f64>,
    /// `|lhs − rhs|` at each center time.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// Comparison of finite-difference energy derivatives with an identity.
///
/// All per-time vectors share the length of `times`. `order` is the
/// least-squares slope of log max residual against log h and comes with the
/// rms deviation of that fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub spec: EnergySpec,
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Largest `|rhs|`, the natural scale for residuals.
    pub rhs_scale: f64,
    pub widths: Vec<WidthResidual>,
    /// log(r_i / r_{i+1}) / log(h_i / h_{i+1}) for consecutive widths.
    pub pairwise_orders: Vec<f64>,
    pub order: Option<f64>,
    pub order_fit_residual: Option<f64>,
}

/// Check `dE/dt = rhs` along `traj` with central differences of each width.
///
/// Widths must be positive integer multiples of the trajectory spacing.
pub fn identity_check(traj: &Trajectory, spec: &EnergySpec, widths: &[f64]) -> Result<IdentityReport> {
    spec.validate()?;
    if widths.is_empty() {
        return Err(Error::invalid("widths", "at least one width is required"));
    }
    let spacing = traj
        .spacing()
        .ok_or_else(|| Error::InsufficientData("trajectory needs two or more uniformly spaced samples".into()))?;
    let mut offsets = Vec::with_capacity(widths.len());
    for &h in widths {
        let j = (h / spacing).round();
        if !(h > 0.0) || j < 1.0 || (j * spacing - h).abs() > 1e-6 * h {
            return Err(Error::invalid(
                "widths",
                format!("{h} is not a positive multiple of the sample spacing {spacing}"),
            ));
        }
        offsets.push(j as usize);
    }
    let reach = *offsets.iter().max().expect("nonempty");
    let n = traj.len();
    if n < 2 * reach + 1 {
        return Err(Error::InsufficientData(format!(
            "{n} samples cannot support a central difference over {reach} samples each way"
        )));
    }
    let energies: Vec<f64> = traj
        .samples
        .iter()
        .map(|(_, u)| energy(u, spec))
        .collect::<Result<_>>()?;
    let centers: Vec<usize> = (reach..n - reach).collect();
    let times: Vec<f64> = centers.iter().map(|&i| traj.samples[i].0).collect();
    let rhs: Vec<f64> = centers
        .iter()
        .map(|&i| identity_rhs(&traj.samples[i].1, spec))
        .collect::<Result<_>>()?;
    let rhs_scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let widths_out: Vec<WidthResidual> = offsets
        .iter()
        .map(|&j| {
            let h = j as f64 * spacing;
            let lhs: Vec<f64> = centers
                .iter()
                .map(|&i| (energies[i + j] - energies[i - j]) / (2.0 * h))
                .collect();
            let residuals: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).collect();
            let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
            WidthResidual {
                h,
                lhs,
                residuals,
                max_residual,
            }
        })
        .collect();
    let pairwise_orders = widths_out
        .windows(2)
        .map(|w| (w[0].max_residual / w[1].max_residual).ln() / (w[0].h / w[1].h).ln())
        .collect();
    let positive = widths_out.iter().all(|w| w.max_residual > 0.0);
    let (order, order_fit_residual) = if widths_out.len() >= 2 && positive {
        let x: Vec<f64> = widths_out.iter().map(|w| w.h.ln()).collect();
        let y: Vec<f64> = widths_out.iter().map(|w| w.max_residual.ln()).collect();
        let (slope, _, _, rms) = linear_fit(&x, &y);
        (Some(slope), Some(rms))
    } else {
        (None, None)
    };
    Ok(IdentityReport {
        spec: spec.clone(),
        times,
        energy: centers.iter().map(|&i| energies[i]).collect(),
        rhs,
        rhs_scale,
        widths: widths_out,
        pairwise_orders,
        order,
        order_fit_residual,
    })
}

impl IdentityReport {
    /// Largest residual at the given width, relative to `1 + rhs_scale`.
    pub fn relative_residual(&self, idx: usize) -> f64 {
        self.widths[idx].max_residual / (1.0 + self.rhs_scale)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
