use std::sync::Arc;

use num_complex::Complex64;

use super::grid::Grid;
use crate::error::{Error, Result};

/// A complex function on the torus, stored as Fourier coefficients.
///
/// Normalization: the plane wave `A e^{i k₀·x}` has coefficient `A` at `k₀`,
/// i.e. `û_k` is the grid mean of `u(x) e^{-i k·x}`.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.total()],
        }
    }

    pub fn from_coeffs(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.total() {
            return Err(Error::SizeMismatch {
                expected: grid.total(),
                got: coeffs.len(),
            });
        }
        Ok(SpectralField {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// `amplitude · e^{i k·x}` for an integer wavevector `k`.
    pub fn plane_wave(grid: &Arc<Grid>, k: &[i64], amplitude: Complex64) -> Result<Self> {
        let idx = grid.index_of(k).ok_or_else(|| {
            Error::invalid("wavevector", format!("{k:?} is not on the {} lattice", grid.spec()))
        })?;
        let mut f = Self::zeros(grid);
        f.coeffs[idx] = amplitude;
        Ok(f)
    }

    pub fn constant(grid: &Arc<Grid>, c: Complex64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[0] = c;
        f
    }

    /// Forward transform of physical samples.
    pub fn from_samples(grid: &Arc<Grid>, samples: &[Complex64]) -> Result<Self> {
        if samples.len() != grid.total() {
            return Err(Error::SizeMismatch {
                expected: grid.total(),
                got: samples.len(),
            });
        }
        let mut data = samples.to_vec();
        grid.transform(&mut data, true);
        let scale = 1.0 / grid.total() as f64;
        data.iter_mut().for_each(|c| *c *= scale);
        Ok(SpectralField {
            grid: grid.clone(),
            coeffs: data,
        })
    }

    /// Inverse transform to physical samples.
    pub fn to_physical(&self) -> Vec<Complex64> {
        let mut data = self.coeffs.clone();
        self.grid.transform(&mut data, false);
        data
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn coeff_at(&self, k: &[i64]) -> Option<Complex64> {
        self.grid.index_of(k).map(|i| self.coeffs[i])
    }

    pub fn same_grid(&self, other: &SpectralField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub(crate) fn check_grid(&self, other: &SpectralField) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{} vs {}",
                self.grid.spec(),
                other.grid.spec()
            )))
        }
    }

    pub fn map_coeffs(&self, mut f: impl FnMut(usize, Complex64) -> Complex64) -> Self {
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().enumerate().map(|(i, &c)| f(i, c)).collect(),
        }
    }

    pub fn scale(&self, a: Complex64) -> Self {
        self.map_coeffs(|_, c| a * c)
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: Complex64, other: &SpectralField) -> Result<Self> {
        self.check_grid(other)?;
        Ok(self.map_coeffs(|i, c| c + a * other.coeffs[i]))
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// Coefficients of `conj(u)`: `û*_{-k}`, with the Nyquist mode mapped to itself.
    pub fn conj(&self) -> Self {
        let grid = &self.grid;
        let mut out = vec![Complex64::new(0.0, 0.0); grid.total()];
        for (idx, c) in self.coeffs.iter().enumerate() {
            let k = grid.wavevector(idx);
            let mut neg = [0i64; 3];
            for a in 0..grid.dim() {
                let n = grid.n(a) as i64;
                neg[a] = -k[a];
                if neg[a] == n / 2 {
                    neg[a] = -n / 2;
                }
            }
            let j = grid.index_of(&neg[..grid.dim()]).expect("negated wavevector on lattice");
            out[j] = c.conj();
        }
        SpectralField {
            grid: grid.clone(),
            coeffs: out,
        }
    }

    /// Zero every mode outside the 2/3 band.
    pub fn dealiased(&self) -> Self {
        let mask = self.grid.dealias_mask();
        self.map_coeffs(|i, c| if mask[i] { c } else { Complex64::new(0.0, 0.0) })
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Euclidean norm of the coefficient vector (equals the L² norm).
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Zero-pad or truncate onto another grid of the same dimension and periods.
    pub fn resample(&self, target: &Arc<Grid>) -> Result<Self> {
        if target.dim() != self.grid.dim() || target.lengths() != self.grid.lengths() {
            return Err(Error::GridMismatch(format!(
                "cannot resample {} onto {}",
                self.grid.spec(),
                target.spec()
            )));
        }
        let mut out = SpectralField::zeros(target);
        for (idx, c) in self.coeffs.iter().enumerate() {
            let k = self.grid.wavevector(idx);
            if let Some(j) = target.index_of(&k[..target.dim()]) {
                out.coeffs[j] = *c;
            }
        }
        Ok(out)
    }
}
