use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::init::{make_initial, InitSpec};
use crate::calculus::{dt_power, i_pow, laplacian_power, Evaluator, SymExpr, POWER_CAP};
use crate::energies::{residual_r2k, EnergySpec};
use crate::error::{Error, Result};
use crate::spectral::{sobolev_norm, Grid, SpectralField};
use crate::stats::linear_fit;

/// `∂_t^k u − i^k Δ^k u` as a symbolic expression in `u`, `ū`.
pub fn dt_power_defect(k: usize, p: f64, dim: usize) -> Result<SymExpr> {
    let lead = laplacian_power(k, dim).scale(&i_pow(k));
    Ok(dt_power(k, p, dim)?.sub(&lead))
}

/// `‖∂_t^k u − i^k Δ^k u‖_{H^s}`, evaluated from the symbolic defect.
pub fn defect_norm(u: &SpectralField, k: usize, s: f64, p: f64) -> Result<f64> {
    let e = dt_power_defect(k, p, u.grid().dim())?;
    Ok(sobolev_norm(&Evaluator::new(u).evaluate(&e)?, s))
}

/// Defect norm over `‖u‖_{H^{s+2k−1}}` (the claimed loss) and over
/// `‖u‖_{H^{s+2k}}` (one derivative too many); `None` for a zero field.
pub fn probe_ratios(u: &SpectralField, k: usize, s: f64, p: f64) -> Result<Option<(f64, f64)>> {
    let claimed = sobolev_norm(u, s + 2.0 * k as f64 - 1.0);
    let strong = sobolev_norm(u, s + 2.0 * k as f64);
    if claimed == 0.0 || strong == 0.0 {
        return Ok(None);
    }
    let num = defect_norm(u, k, s, p)?;
    Ok(Some((num / claimed, num / strong)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl RatioStats {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let m = v.len();
        let median = if m % 2 == 1 { v[m / 2] } else { 0.5 * (v[m / 2 - 1] + v[m / 2]) };
        Some(RatioStats {
            min: v[0],
            median,
            max: v[m - 1],
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub n: Vec<usize>,
    pub k: usize,
    pub s: f64,
    pub p: f64,
    /// Smoothness index of the random data.
    pub data_s: f64,
    pub samples: usize,
    pub skipped: usize,
    /// Denominator `‖u‖_{H^{s+2k−1}}`.
    pub ratios: Vec<f64>,
    pub stats: Option<RatioStats>,
    /// Denominator `‖u‖_{H^{s+2k}}`.
    pub strong_ratios: Vec<f64>,
    pub strong_stats: Option<RatioStats>,
}

/// Ratio statistics over `ensemble_size` random fields with seeds
/// `seed, seed+1, …`.
///
/// Data are `random_sobolev` with index `s + 2k − 1` normalized to
/// `‖u‖_{H¹} = 1`; modes are drawn per wave vector, so a finer grid holds
/// the same low modes plus new high ones.
pub fn norm_equivalence_probe(
    grid: &Arc<Grid>,
    k: usize,
    s: f64,
    p: f64,
    ensemble_size: usize,
    seed: u64,
) -> Result<ProbeReport> {
    if k == 0 || k > POWER_CAP {
        return Err(Error::PowerCap { k, cap: POWER_CAP });
    }
    if ensemble_size == 0 {
        return Err(Error::invalid("ensemble_size", "must be >= 1"));
    }
    let data_s = s + 2.0 * k as f64 - 1.0;
    let mut ratios = Vec::new();
    let mut strong_ratios = Vec::new();
    let mut skipped = 0;
    for i in 0..ensemble_size {
        let spec = InitSpec::RandomSobolev {
            s: data_s,
            amplitude: 1.0,
            seed: seed.wrapping_add(i as u64),
            norm_s: Some(1.0),
            background: 0.0,
        };
        let u = make_initial(&spec, grid)?;
        match probe_ratios(&u, k, s, p)? {
            Some((a, b)) => {
                ratios.push(a);
                strong_ratios.push(b);
            }
            None => skipped += 1,
        }
    }
    Ok(ProbeReport {
        n: grid.spec().n.clone(),
        k,
        s,
        p,
        data_s,
        samples: ratios.len(),
        skipped,
        stats: RatioStats::of(&ratios),
        strong_stats: RatioStats::of(&strong_ratios),
        ratios,
        strong_ratios,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubordinationReport {
    pub k: usize,
    pub p: f64,
    /// `(‖u‖_{H^{2k}}, |R_{2k}(u)|)` per sample, all with `‖u‖_{H¹} = 1`.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub r_squared: f64,
    /// `(4k − 4)/(2k − 1) + 0.3`.
    pub bound: f64,
    pub within_bound: bool,
}

/// Log–log slope of `|R_{2k}|` against `‖u‖_{H^{2k}}` at fixed `‖u‖_{H¹} = 1`.
///
/// Each radius `K` contributes `members` shell data with `K ≤ |ξ| ≤ 1.25K + 1`,
/// so `‖u‖_{H^{2k}}` sweeps roughly the range of the radii.
pub fn residual_subordination(
    grid: &Arc<Grid>,
    k: usize,
    p: f64,
    radii: &[f64],
    members: usize,
    seed: u64,
) -> Result<SubordinationReport> {
    let spec = EnergySpec::even(k, p);
    spec.validate()?;
    let mut points = Vec::new();
    for (j, &r) in radii.iter().enumerate() {
        for i in 0..members {
            let init = InitSpec::Shell {
                k_min: r,
                k_max: 1.25 * r + 1.0,
                amplitude: 1.0,
                seed: seed.wrapping_add((j * members + i) as u64),
                norm_s: 1.0,
            };
            let u = make_initial(&init, grid)?;
            points.push((sobolev_norm(&u, 2.0 * k as f64), residual_r2k(&u, &spec)?.abs()));
        }
    }
    if points.len() < 3 || points.iter().any(|(_, r)| *r <= 0.0) {
        return Err(Error::InsufficientData("need three or more samples with nonzero residual".into()));
    }
    let x: Vec<f64> = points.iter().map(|(h, _)| h.ln()).collect();
    let y: Vec<f64> = points.iter().map(|(_, r)| r.ln()).collect();
    let (slope, _, r_squared, _) = linear_fit(&x, &y);
    let kf = k as f64;
    let bound = (4.0 * kf - 4.0) / (2.0 * kf - 1.0) + 0.3;
    Ok(SubordinationReport {
        k,
        p,
        points,
        slope,
        r_squared,
        bound,
        within_bound: slope <= bound,
    })
}
