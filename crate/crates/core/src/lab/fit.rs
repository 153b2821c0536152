use serde::{Deserialize, Serialize};

use crate::stats::linear_fit;
use crate::error::{Error, Result};
use crate::integrator::Regime;

/// Policy margin added to envelope exponents; the bounds carry an unquantified `+ε`.
pub const ENVELOPE_MARGIN: f64 = 0.5;

/// Smallest number of samples a fit accepts.
pub const MIN_FIT_SAMPLES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthModel {
    /// `y ≈ C t^a`, fitted on (log t, log y).
    Polynomial,
    /// `y ≈ C e^{r t}`, fitted on (t, log y).
    Exponential,
}

/// Upper-bound growth law for a regime and Sobolev index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub model: GrowthModel,
    /// Bound on the exponent (polynomial) or `None` when only some finite
    /// rate is asserted (exponential).
    pub exponent: Option<f64>,
    /// Same bound on a generic compact manifold, for reference.
    pub generic_reference: Option<f64>,
    pub description: String,
}

/// Growth law bounding `‖u(t)‖_{H^m}` in `regime`.
pub fn envelope(regime: Regime, m: f64, p: f64) -> Envelope {
    match regime {
        Regime::PlanarOdd => Envelope {
            model: GrowthModel::Polynomial,
            exponent: Some(m - 1.0),
            generic_reference: Some(2.0 * (m - 1.0)),
            description: format!(
                "2d torus: T^(m-1) = T^{} (any positive loss index); generic surface reference T^{}",
                m - 1.0,
                2.0 * (m - 1.0)
            ),
        },
        Regime::CubicSpatial => Envelope {
            model: GrowthModel::Exponential,
            exponent: None,
            generic_reference: None,
            description: "3d cubic: exp(CT) with unspecified C".into(),
        },
        Regime::SubCubicSpatial => Envelope {
            model: GrowthModel::Polynomial,
            exponent: Some(4.0 / (3.0 - p)),
            generic_reference: None,
            description: format!("3d sub-cubic H^2: T^(4/(3-p)) = T^{}", 4.0 / (3.0 - p)),
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub model: GrowthModel,
    /// Exponent `a` (polynomial) or rate `r` (exponential).
    pub exponent_or_rate: f64,
    /// `C` in the fitted law.
    pub prefactor: f64,
    pub fit_window: (f64, f64),
    pub samples: usize,
    pub r_squared: f64,
    pub envelope_exponent: Option<f64>,
    pub margin: f64,
    /// `exponent ≤ envelope + margin`; always true without a numeric envelope.
    pub within_envelope: bool,
}

/// Least-squares growth fit of positive samples with `t` in `window`.
pub fn fit_growth(
    series: &[(f64, f64)],
    model: GrowthModel,
    window: (f64, f64),
    envelope_exponent: Option<f64>,
) -> Result<GrowthFit> {
    let (lo, hi) = window;
    if !(lo <= hi) {
        return Err(Error::invalid("window", format!("({lo}, {hi}) is empty")));
    }
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|(t, _)| *t >= lo && *t <= hi)
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} samples in window [{lo}, {hi}], need {MIN_FIT_SAMPLES}",
            pts.len()
        )));
    }
    if let Some((t, y)) = pts
        .iter()
        .find(|(t, y)| !(y.is_finite() && *y > 0.0) || !t.is_finite())
    {
        return Err(Error::InsufficientData(format!("non-positive value {y} at t = {t}")));
    }
    if model == GrowthModel::Polynomial && pts.iter().any(|(t, _)| *t <= 0.0) {
        return Err(Error::InsufficientData("polynomial fits need t > 0".into()));
    }
    let x: Vec<f64> = pts
        .iter()
        .map(|(t, _)| match model {
            GrowthModel::Polynomial => t.ln(),
            GrowthModel::Exponential => *t,
        })
        .collect();
    let y: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let (slope, intercept, r2, _) = linear_fit(&x, &y);
    let within = envelope_exponent.is_none_or(|e| slope <= e + ENVELOPE_MARGIN);
    Ok(GrowthFit {
        model,
        exponent_or_rate: slope,
        prefactor: intercept.exp(),
        fit_window: (pts[0].0, pts[pts.len() - 1].0),
        samples: pts.len(),
        r_squared: r2,
        envelope_exponent,
        margin: ENVELOPE_MARGIN,
        within_envelope: within,
    })
}

/// Fits over the trailing portions `[t_end − f·(t_end − t_start), t_end]` of the window.
pub fn window_sensitivity(
    series: &[(f64, f64)],
    model: GrowthModel,
    window: (f64, f64),
    envelope_exponent: Option<f64>,
    fractions: &[f64],
) -> Vec<GrowthFit> {
    let hi = series
        .iter()
        .map(|(t, _)| *t)
        .filter(|t| *t <= window.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let lo = window.0;
    fractions
        .iter()
        .filter_map(|f| {
            let start = hi - f * (hi - lo);
            fit_growth(series, model, (start, window.1), envelope_exponent).ok()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..200).map(|i| 0.5 + i as f64 * 0.25).map(|t| (t, f(t))).collect()
    }

    #[test]
    fn recovers_power_law() {
        let s = synth(|t| 3.0 * t.powf(1.5));
        let fit = fit_growth(&s, GrowthModel::Polynomial, (1.0, 100.0), Some(1.5)).unwrap();
        assert!((fit.exponent_or_rate - 1.5).abs() < 1e-6);
        assert!((fit.prefactor - 3.0).abs() < 1e-6);
        assert!(fit.r_squared >= 0.999999);
        assert!(fit.within_envelope);
        let tight = fit_growth(&s, GrowthModel::Polynomial, (1.0, 100.0), Some(0.9)).unwrap();
        assert!(!tight.within_envelope);
    }

    #[test]
    fn recovers_exponential_rate() {
        let s = synth(|t| 2.0 * (0.3 * t).exp());
        let fit = fit_growth(&s, GrowthModel::Exponential, (0.0, 50.0), None).unwrap();
        assert!((fit.exponent_or_rate - 0.3).abs() < 1e-6);
        assert!(fit.r_squared >= 0.999999);
        assert!(fit.within_envelope);
    }

    #[test]
    fn constant_series_has_zero_exponent() {
        let s = synth(|_| 4.2);
        for env in [0.01, 1.0, 8.0] {
            let fit = fit_growth(&s, GrowthModel::Polynomial, (1.0, 1e9), Some(env)).unwrap();
            assert!(fit.exponent_or_rate.abs() < 1e-9);
            assert!(fit.within_envelope);
        }
    }

    #[test]
    fn rejects_bad_data() {
        let s = synth(|t| t);
        assert!(matches!(
            fit_growth(&s[..5], GrowthModel::Polynomial, (0.0, 1e9), None),
            Err(Error::InsufficientData(_))
        ));
        let mut z = s.clone();
        z[20].1 = 0.0;
        assert!(fit_growth(&z, GrowthModel::Polynomial, (0.0, 1e9), None).is_err());
        assert!(fit_growth(&s, GrowthModel::Polynomial, (5.0, 1.0), None).is_err());
    }

    #[test]
    fn envelopes() {
        let e = envelope(Regime::PlanarOdd, 2.0, 3.0);
        assert_eq!(e.exponent, Some(1.0));
        assert_eq!(e.generic_reference, Some(2.0));
        assert_eq!(envelope(Regime::SubCubicSpatial, 2.0, 2.5).exponent, Some(8.0));
        assert_eq!(envelope(Regime::CubicSpatial, 2.0, 3.0).model, GrowthModel::Exponential);
    }

    #[test]
    fn sensitivity_windows_shrink() {
        let s = synth(|t| t * t);
        let fits = window_sensitivity(&s, GrowthModel::Polynomial, (1.0, 50.0), None, &[1.0, 0.5, 0.25]);
        assert_eq!(fits.len(), 3);
        assert!(fits[0].samples > fits[1].samples && fits[1].samples > fits[2].samples);
        for f in fits {
            assert!((f.exponent_or_rate - 2.0).abs() < 1e-9);
        }
    }
}
