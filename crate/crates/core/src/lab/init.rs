use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{sobolev_norm, Grid, SpectralField};

/// Initial datum.
///
/// Random kinds draw each Fourier mode from its own generator keyed by
/// `(seed, k)` and only inside the 2/3 band, so refining the grid keeps the
/// existing modes and adds new ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    /// `amplitude · e^{i phase} · e^{i k·x}`.
    PlaneWave {
        k: Vec<i64>,
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Complex Gaussian modes times `(1+|ξ|²)^{−(s/2 + d/4 + 0.01)}`, rescaled
    /// so that `‖u‖_{H^{norm_s}} = amplitude` (`norm_s` defaults to `s`); a
    /// constant `background` is added afterwards.
    RandomSobolev {
        s: f64,
        amplitude: f64,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        norm_s: Option<f64>,
        #[serde(default, skip_serializing_if = "is_zero")]
        background: f64,
    },
    /// `amplitude · exp(−|x − center|² / (2 width²))` with periodic distance;
    /// `center` defaults to the middle of the box.
    GaussianBump {
        width: f64,
        amplitude: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// Flat-spectrum complex Gaussian modes with `k_min ≤ |k| ≤ k_max`,
    /// rescaled so that `‖u‖_{H^{norm_s}} = amplitude`.
    Shell {
        k_min: f64,
        k_max: f64,
        amplitude: f64,
        seed: u64,
        #[serde(default = "one")]
        norm_s: f64,
    },
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

fn one() -> f64 {
    1.0
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{v} must be finite and > 0")))
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{v} must be finite")))
    }
}

impl InitSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            InitSpec::PlaneWave { k, amplitude, phase } => {
                if k.len() != dim {
                    return Err(Error::invalid(
                        "init.k",
                        format!("{} components for a {dim}-dimensional grid", k.len()),
                    ));
                }
                positive("init.amplitude", *amplitude)?;
                finite("init.phase", *phase)
            }
            InitSpec::RandomSobolev {
                s,
                amplitude,
                norm_s,
                background,
                ..
            } => {
                finite("init.s", *s)?;
                positive("init.amplitude", *amplitude)?;
                if let Some(ns) = norm_s {
                    finite("init.norm_s", *ns)?;
                }
                finite("init.background", *background)
            }
            InitSpec::GaussianBump {
                width,
                amplitude,
                center,
            } => {
                positive("init.width", *width)?;
                positive("init.amplitude", *amplitude)?;
                if let Some(c) = center {
                    if c.len() != dim || c.iter().any(|x| !x.is_finite()) {
                        return Err(Error::invalid("init.center", format!("need {dim} finite coordinates")));
                    }
                }
                Ok(())
            }
            InitSpec::Shell {
                k_min,
                k_max,
                amplitude,
                norm_s,
                ..
            } => {
                if !(k_min.is_finite() && *k_min >= 0.0 && k_max.is_finite() && k_max >= k_min) {
                    return Err(Error::invalid("init.k_max", "need 0 <= k_min <= k_max"));
                }
                positive("init.amplitude", *amplitude)?;
                finite("init.norm_s", *norm_s)
            }
        }
    }

    /// Same spec with a different seed (random kinds only).
    pub fn with_seed(&self, new_seed: u64) -> Self {
        let mut out = self.clone();
        match &mut out {
            InitSpec::RandomSobolev { seed, .. } | InitSpec::Shell { seed, .. } => *seed = new_seed,
            _ => {}
        }
        out
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            InitSpec::RandomSobolev { seed, .. } | InitSpec::Shell { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Standard complex Gaussian draw for mode `k`, independent of the grid size.
fn mode_draw(seed: u64, k: [i64; 3]) -> Complex64 {
    let mut h = splitmix(seed);
    for c in k {
        h = splitmix(h ^ c as u64);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(h);
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) / 2f64.sqrt()
}

fn random_modes(grid: &Arc<Grid>, seed: u64, weight: impl Fn(f64, f64) -> f64) -> SpectralField {
    let mask = grid.dealias_mask().to_vec();
    let ksq = grid.ksq().to_vec();
    SpectralField::zeros(grid).map_coeffs(|i, _| {
        if !mask[i] {
            return Complex64::new(0.0, 0.0);
        }
        let k = grid.wavevector(i);
        let kn = (k.iter().map(|c| (c * c) as f64).sum::<f64>()).sqrt();
        let w = weight(ksq[i], kn);
        if w == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            w * mode_draw(seed, k)
        }
    })
}

fn rescale(f: SpectralField, s: f64, amplitude: f64) -> Result<SpectralField> {
    let norm = sobolev_norm(&f, s);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::invalid("init", "random datum has no modes inside the band"));
    }
    Ok(f.scale(Complex64::new(amplitude / norm, 0.0)))
}

pub fn make_initial(spec: &InitSpec, grid: &Arc<Grid>) -> Result<SpectralField> {
    let dim = grid.dim();
    spec.validate(dim)?;
    match spec {
        InitSpec::PlaneWave { k, amplitude, phase } => {
            SpectralField::plane_wave(grid, k, Complex64::from_polar(*amplitude, *phase))
        }
        InitSpec::RandomSobolev {
            s,
            amplitude,
            seed,
            norm_s,
            background,
        } => {
            let decay = s / 2.0 + dim as f64 / 4.0 + 0.01;
            let f = random_modes(grid, *seed, |q, _| (1.0 + q).powf(-decay));
            let f = rescale(f, norm_s.unwrap_or(*s), *amplitude)?;
            Ok(f.axpy(
                Complex64::new(1.0, 0.0),
                &SpectralField::constant(grid, Complex64::new(*background, 0.0)),
            )?)
        }
        InitSpec::Shell {
            k_min,
            k_max,
            amplitude,
            seed,
            norm_s,
        } => {
            let f = random_modes(grid, *seed, |_, kn| {
                if kn >= *k_min && kn <= *k_max {
                    1.0
                } else {
                    0.0
                }
            });
            rescale(f, *norm_s, *amplitude)
        }
        InitSpec::GaussianBump {
            width,
            amplitude,
            center,
        } => {
            let lengths = grid.lengths();
            let c: Vec<f64> = center
                .clone()
                .unwrap_or_else(|| lengths.iter().map(|l| l / 2.0).collect());
            let samples: Vec<Complex64> = (0..grid.total())
                .map(|idx| {
                    let x = grid.point(idx);
                    let r2: f64 = (0..dim)
                        .map(|a| {
                            let l = lengths[a];
                            let d = (x[a] - c[a]).rem_euclid(l);
                            let d = d.min(l - d);
                            d * d
                        })
                        .sum();
                    Complex64::new(amplitude * (-r2 / (2.0 * width * width)).exp(), 0.0)
                })
                .collect();
            SpectralField::from_samples(grid, &samples)
        }
    }
}
