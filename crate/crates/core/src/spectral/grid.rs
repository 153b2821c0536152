use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discretization of a flat torus: points per axis and period per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<Vec<f64>>,
}

impl GridSpec {
    pub fn new(n: Vec<usize>, length: Option<Vec<f64>>) -> Result<Self> {
        let spec = GridSpec { n, length };
        spec.validate()?;
        Ok(spec)
    }

    /// `dim` axes of `n` points each, period 2π.
    pub fn cube(dim: usize, n: usize) -> Result<Self> {
        Self::new(vec![n; dim], None)
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.length
            .clone()
            .unwrap_or_else(|| vec![2.0 * PI; self.n.len()])
    }

    pub fn total(&self) -> usize {
        self.n.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.n.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::invalid("grid.n", format!("dimension {dim} not in 1..=3")));
        }
        for &n in &self.n {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::invalid(
                    "grid.n",
                    format!("{n} points per axis; need a power of two >= 8"),
                ));
            }
        }
        if let Some(l) = &self.length {
            if l.len() != dim {
                return Err(Error::invalid(
                    "grid.length",
                    format!("{} periods given for {dim} axes", l.len()),
                ));
            }
            if l.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
                return Err(Error::invalid("grid.length", "periods must be finite and > 0"));
            }
        }
        self.n
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .filter(|&t| t <= u32::MAX as usize)
            .ok_or_else(|| Error::invalid("grid.n", "total point count overflows the index range"))?;
        Ok(())
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self.n.iter().map(|n| n.to_string()).collect();
        write!(f, "{}", dims.join("x"))
    }
}

/// Validated grid with precomputed wavevectors, masks and transform plans.
///
/// Coefficients and samples are stored row-major (last axis fastest); along
/// each axis the coefficient index `i` holds integer wavenumber `i` for
/// `i < n/2` and `i - n` otherwise.
pub struct Grid {
    spec: GridSpec,
    strides: Vec<usize>,
    /// Per-axis wavevector components ξ = 2πk/L, indexed like coefficients.
    xi: Vec<Vec<f64>>,
    /// Per-axis integer wavenumbers.
    wavenumber: Vec<Vec<i64>>,
    ksq: Vec<f64>,
    dealias: Vec<bool>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("spec", &self.spec).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Arc<Self>> {
        spec.validate()?;
        let dim = spec.dim();
        let lengths = spec.lengths();
        let mut strides = vec![1usize; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * spec.n[a + 1];
        }
        let wavenumber: Vec<Vec<i64>> = spec
            .n
            .iter()
            .map(|&n| {
                (0..n)
                    .map(|i| if i < n / 2 { i as i64 } else { i as i64 - n as i64 })
                    .collect()
            })
            .collect();
        let xi: Vec<Vec<f64>> = wavenumber
            .iter()
            .zip(&lengths)
            .map(|(ks, &l)| ks.iter().map(|&k| 2.0 * PI * k as f64 / l).collect())
            .collect();

        let total = spec.total();
        let mut ksq = vec![0.0; total];
        let mut dealias = vec![true; total];
        for (idx, (q, keep)) in ksq.iter_mut().zip(dealias.iter_mut()).enumerate() {
            let mut rem = idx;
            for a in 0..dim {
                let i = rem / strides[a];
                rem %= strides[a];
                *q += xi[a][i] * xi[a][i];
                // 2/3 rule: keep |k_j| <= n_j / 3
                if 3 * wavenumber[a][i].unsigned_abs() as usize > spec.n[a] {
                    *keep = false;
                }
            }
        }

        let mut planner = FftPlanner::new();
        let forward = spec.n.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = spec.n.iter().map(|&n| planner.plan_fft_inverse(n)).collect();

        Ok(Arc::new(Grid {
            spec,
            strides,
            xi,
            wavenumber,
            ksq,
            dealias,
            forward,
            inverse,
        }))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn total(&self) -> usize {
        self.ksq.len()
    }

    pub fn n(&self, axis: usize) -> usize {
        self.spec.n[axis]
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.spec.lengths()
    }

    /// |ξ|² for every coefficient index.
    pub fn ksq(&self) -> &[f64] {
        &self.ksq
    }

    /// Wavevector component along `axis` for the per-axis index `i`.
    pub fn xi_axis(&self, axis: usize) -> &[f64] {
        &self.xi[axis]
    }

    pub fn wavenumber_axis(&self, axis: usize) -> &[i64] {
        &self.wavenumber[axis]
    }

    /// True for coefficients inside the 2/3 dealiasing band.
    pub fn dealias_mask(&self) -> &[bool] {
        &self.dealias
    }

    /// Per-axis indices of a flat coefficient index.
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for (a, s) in self.strides.iter().enumerate() {
            out[a] = idx / s;
            idx %= s;
        }
        out
    }

    /// Integer wavevector of a flat coefficient index (unused axes are 0).
    pub fn wavevector(&self, idx: usize) -> [i64; 3] {
        let ij = self.unravel(idx);
        let mut k = [0i64; 3];
        for a in 0..self.dim() {
            k[a] = self.wavenumber[a][ij[a]];
        }
        k
    }

    /// Flat coefficient index of an integer wavevector, if it lies on the lattice.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim() {
            return None;
        }
        let mut idx = 0usize;
        for (a, &ka) in k.iter().enumerate() {
            let n = self.spec.n[a] as i64;
            if ka < -n / 2 || ka >= n / 2 {
                return None;
            }
            let i = ka.rem_euclid(n) as usize;
            idx += i * self.strides[a];
        }
        Some(idx)
    }

    /// Physical coordinates of grid point `idx`.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let ij = self.unravel(idx);
        let lengths = self.lengths();
        let mut x = [0.0; 3];
        for a in 0..self.dim() {
            x[a] = ij[a] as f64 * lengths[a] / self.spec.n[a] as f64;
        }
        x
    }

    pub(crate) fn is_nyquist(&self, axis: usize, i: usize) -> bool {
        2 * i == self.spec.n[axis]
    }

    /// In-place unnormalized transform along every axis.
    pub(crate) fn transform(&self, data: &mut [rustfft::num_complex::Complex<f64>], forward: bool) {
        let dim = self.dim();
        let plans = if forward { &self.forward } else { &self.inverse };
        for a in 0..dim {
            let n = self.spec.n[a];
            let stride = self.strides[a];
            if stride == 1 {
                plans[a].process(data);
                continue;
            }
            let block = stride * n;
            let mut line = vec![Default::default(); n];
            let mut scratch = vec![Default::default(); plans[a].get_inplace_scratch_len()];
            for base in (0..data.len()).step_by(block) {
                for off in 0..stride {
                    let start = base + off;
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = data[start + i * stride];
                    }
                    plans[a].process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        data[start + i * stride] = *v;
                    }
                }
            }
        }
    }
}
