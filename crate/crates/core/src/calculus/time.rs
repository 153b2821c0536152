use std::collections::HashMap;

use super::expr::{accumulate, imag, real, Coeff, Factor, Monomial, SymExpr};
use crate::error::{Error, Result};
use crate::integrator::odd_power_index;

/// Largest k accepted by [`dt_power`].
pub const POWER_CAP: usize = 3;
/// Largest per-factor spatial order any time derivative may produce.
pub const ORDER_CAP: usize = 12;

fn power_index(p: f64) -> Result<usize> {
    odd_power_index(p).ok_or(Error::NonPolynomial(p))
}

/// `|u|^{p−1}u = u^{n+1} ū^n` for `p = 2n+1`.
pub fn nonlinearity_expr(p: f64, dim: usize) -> Result<SymExpr> {
    let n = power_index(p)?;
    let mut factors = vec![Factor::u(); n + 1];
    factors.extend(std::iter::repeat_n(Factor::ubar(), n));
    Ok(SymExpr::from_terms(dim, [(Monomial::from_factors(factors), real(1, 1))]))
}

/// `|u|² = u ū`.
pub fn density(dim: usize) -> SymExpr {
    SymExpr::u(dim).mul(&SymExpr::ubar(dim))
}

/// `(uū)^j`; `j = 0` is the constant 1.
pub fn density_power(dim: usize, j: usize) -> SymExpr {
    density(dim).pow(j)
}

/// Substitution rules ∂_t ∂^α u = iΣ_j ∂^{α+2e_j}u − i∂^α(u^{n+1}ū^n) and
/// their conjugates, memoized per factor.
struct Rules {
    dim: usize,
    nonlinearity: SymExpr,
    cache: HashMap<Factor, SymExpr>,
}

impl Rules {
    fn new(p: f64, dim: usize) -> Result<Self> {
        Ok(Rules {
            dim,
            nonlinearity: nonlinearity_expr(p, dim)?,
            cache: HashMap::new(),
        })
    }

    fn dt_factor(&mut self, f: Factor) -> &SymExpr {
        if !self.cache.contains_key(&f) {
            let e = if f.conj {
                self.dt_factor(f.conjugate()).conj()
            } else {
                let mut lin = SymExpr::zero(self.dim);
                for j in 0..self.dim {
                    lin.add_term(
                        Monomial::from_factors(vec![f.differentiate(j, 2)]),
                        imag(1, 1),
                    );
                }
                let nl = self.nonlinearity.d_multi(f.alpha()).scale(&imag(-1, 1));
                lin.add(&nl)
            };
            self.cache.insert(f, e);
        }
        &self.cache[&f]
    }

    fn apply(&mut self, e: &SymExpr, cap: usize) -> Result<SymExpr> {
        let mut acc: HashMap<Monomial, Coeff> = HashMap::new();
        for (m, c) in e.terms() {
            let factors = m.factors();
            let mut pos = 0;
            while pos < factors.len() {
                let f = factors[pos];
                let mult = factors[pos..].iter().take_while(|&&g| g == f).count();
                let rest = m.without(pos);
                let weight = c * real(mult as i64, 1);
                for (mf, cf) in self.dt_factor(f).terms() {
                    accumulate(&mut acc, rest.mul(mf), &weight * cf);
                }
                pos += mult;
            }
        }
        let out = SymExpr::from_map(self.dim, acc);
        let order = out.max_factor_order();
        if order > cap {
            return Err(Error::OrderCap { order, cap });
        }
        Ok(out)
    }
}

/// ∂_t of `e` along the flow, with ∂_t u and ∂_t ū replaced by the equation.
pub fn time_derivative(e: &SymExpr, p: f64) -> Result<SymExpr> {
    time_derivative_capped(e, p, ORDER_CAP)
}

pub fn time_derivative_capped(e: &SymExpr, p: f64, order_cap: usize) -> Result<SymExpr> {
    Rules::new(p, e.dim())?.apply(e, order_cap)
}

/// ∂_t^j e for j = 0..=k, sharing one rule cache.
pub fn time_derivatives(e: &SymExpr, k: usize, p: f64) -> Result<Vec<SymExpr>> {
    let mut rules = Rules::new(p, e.dim())?;
    let mut out = vec![e.clone()];
    for _ in 0..k {
        let next = rules.apply(out.last().expect("nonempty"), ORDER_CAP)?;
        out.push(next);
    }
    Ok(out)
}

/// ∂_t^k u as a polynomial in u, ū and their spatial derivatives.
pub fn dt_power(k: usize, p: f64, dim: usize) -> Result<SymExpr> {
    if k > POWER_CAP {
        return Err(Error::PowerCap { k, cap: POWER_CAP });
    }
    Ok(time_derivatives(&SymExpr::u(dim), k, p)?.pop().expect("nonempty"))
}

/// `Δ^k u`.
pub fn laplacian_power(k: usize, dim: usize) -> SymExpr {
    (0..k).fold(SymExpr::u(dim), |e, _| e.laplacian())
}
