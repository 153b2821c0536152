use std::collections::HashMap;

use num_complex::Complex64;

use super::expr::{to_c64, Factor, SymExpr};
use crate::error::{Error, Result};
use crate::spectral::{derivative, SpectralField};

/// Realizes expressions on one field, caching each factor's samples.
///
/// Single-factor monomials are exact Fourier multipliers. In products every
/// factor is restricted to the 2/3 band before sampling, and evaluated
/// products are restricted to the band afterwards.
pub struct Evaluator<'a> {
    u: &'a SpectralField,
    band: SpectralField,
    samples: HashMap<[u8; 3], Vec<Complex64>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(u: &'a SpectralField) -> Self {
        Evaluator {
            u,
            band: u.dealiased(),
            samples: HashMap::new(),
        }
    }

    fn check(&self, e: &SymExpr) -> Result<()> {
        if e.dim() != self.u.grid().dim() {
            return Err(Error::GridMismatch(format!(
                "expression in dimension {} on a {}-dimensional grid",
                e.dim(),
                self.u.grid().dim()
            )));
        }
        Ok(())
    }

    fn factor_samples(&mut self, f: Factor) -> &[Complex64] {
        let dim = self.u.grid().dim();
        let band = &self.band;
        self.samples
            .entry(f.alpha())
            .or_insert_with(|| derivative(band, &f.alpha()[..dim]).to_physical())
    }

    /// Physical samples of the multi-factor part plus the constant part.
    fn product_samples(&mut self, e: &SymExpr, include_linear: bool) -> Vec<Complex64> {
        let total = self.u.grid().total();
        let mut acc = vec![Complex64::new(0.0, 0.0); total];
        let mut prod = vec![Complex64::new(0.0, 0.0); total];
        for (m, c) in e.terms() {
            if m.len() == 1 && !include_linear {
                continue;
            }
            prod.fill(to_c64(c));
            for &f in m.factors() {
                let s = self.factor_samples(f);
                if f.conj {
                    prod.iter_mut().zip(s).for_each(|(a, b)| *a *= b.conj());
                } else {
                    prod.iter_mut().zip(s).for_each(|(a, b)| *a *= b);
                }
            }
            acc.iter_mut().zip(&prod).for_each(|(a, b)| *a += b);
        }
        acc
    }

    pub fn evaluate(&mut self, e: &SymExpr) -> Result<SpectralField> {
        self.check(e)?;
        let dim = self.u.grid().dim();
        let mut out = SpectralField::from_samples(self.u.grid(), &self.product_samples(e, false))?
            .dealiased();
        for (m, c) in e.terms() {
            if m.len() == 1 {
                let f = m.factors()[0];
                let mut d = derivative(self.u, &f.alpha()[..dim]);
                if f.conj {
                    d = d.conj();
                }
                out = out.axpy(to_c64(c), &d)?;
            }
        }
        Ok(out)
    }

    /// ∫ e under the mean measure.
    pub fn integrate(&mut self, e: &SymExpr) -> Result<Complex64> {
        self.check(e)?;
        let s = self.product_samples(e, true);
        Ok(s.iter().sum::<Complex64>() / s.len() as f64)
    }
}

pub fn evaluate(e: &SymExpr, u: &SpectralField) -> Result<SpectralField> {
    Evaluator::new(u).evaluate(e)
}

pub fn integrate(e: &SymExpr, u: &SpectralField) -> Result<Complex64> {
    Evaluator::new(u).integrate(e)
}
