use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use smallvec::SmallVec;

/// Exact Gaussian-rational coefficient.
pub type Coeff = Complex<BigRational>;

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn coeff(re: BigRational, im: BigRational) -> Coeff {
    Complex::new(re, im)
}

pub fn real(n: i64, d: i64) -> Coeff {
    Complex::new(rat(n, d), BigRational::zero())
}

pub fn imag(n: i64, d: i64) -> Coeff {
    Complex::new(BigRational::zero(), rat(n, d))
}

/// `i^k`.
pub fn i_pow(k: usize) -> Coeff {
    match k % 4 {
        0 => real(1, 1),
        1 => imag(1, 1),
        2 => real(-1, 1),
        _ => imag(-1, 1),
    }
}

pub fn is_zero(c: &Coeff) -> bool {
    c.re.is_zero() && c.im.is_zero()
}

pub fn to_c64(c: &Coeff) -> Complex64 {
    Complex64::new(
        c.re.to_f64().unwrap_or(f64::NAN),
        c.im.to_f64().unwrap_or(f64::NAN),
    )
}

/// `∂^α u` (or `∂^α ū` when `conj`).
///
/// Ordering is (conj, total order, multi-index), the canonical factor order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Factor {
    pub conj: bool,
    order: u8,
    alpha: [u8; 3],
}

impl Factor {
    pub fn new(conj: bool, alpha: [u8; 3]) -> Self {
        Factor {
            conj,
            order: alpha.iter().sum(),
            alpha,
        }
    }

    pub fn u() -> Self {
        Self::new(false, [0; 3])
    }

    pub fn ubar() -> Self {
        Self::new(true, [0; 3])
    }

    pub fn alpha(&self) -> [u8; 3] {
        self.alpha
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn conjugate(&self) -> Self {
        Factor { conj: !self.conj, ..*self }
    }

    pub fn differentiate(&self, axis: usize, times: u8) -> Self {
        let mut alpha = self.alpha;
        alpha[axis] += times;
        Self::new(self.conj, alpha)
    }
}

/// Product of factors in canonical (sorted) order; the empty product is 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(SmallVec<[Factor; 8]>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(SmallVec::new())
    }

    pub fn from_factors(mut factors: Vec<Factor>) -> Self {
        factors.sort_unstable();
        Monomial(factors.into_iter().collect())
    }

    pub fn factors(&self) -> &[Factor] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                out.push(a[i]);
                i += 1;
            } else {
                out.push(b[j]);
                j += 1;
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// Monomial with the factor at `pos` removed.
    pub fn without(&self, pos: usize) -> Monomial {
        let mut v = self.0.clone();
        v.remove(pos);
        Monomial(v)
    }

    /// Monomial with the factor at `pos` replaced, re-sorted.
    pub fn replaced(&self, pos: usize, f: Factor) -> Monomial {
        let mut v = self.0.clone();
        v[pos] = f;
        v.sort_unstable();
        Monomial(v)
    }

    pub fn conjugate(&self) -> Monomial {
        Monomial::from_factors(self.0.iter().map(Factor::conjugate).collect())
    }

    pub fn max_order(&self) -> usize {
        self.0.iter().map(Factor::order).max().unwrap_or(0)
    }

    pub fn total_order(&self) -> usize {
        self.0.iter().map(Factor::order).sum()
    }

    /// (number of u factors, number of ū factors).
    pub fn counts(&self) -> (usize, usize) {
        let nv = self.0.iter().filter(|f| f.conj).count();
        (self.0.len() - nv, nv)
    }

    /// Summed multi-index over all factors.
    pub fn multidegree(&self) -> [u8; 3] {
        let mut d = [0u8; 3];
        for f in &self.0 {
            for a in 0..3 {
                d[a] += f.alpha[a];
            }
        }
        d
    }
}

/// Normalized finite sum of monomials with exact coefficients.
///
/// No two terms share a monomial, no coefficient is zero and terms iterate
/// in the canonical monomial order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymExpr {
    dim: usize,
    terms: BTreeMap<Monomial, Coeff>,
}

impl SymExpr {
    pub fn zero(dim: usize) -> Self {
        SymExpr {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: Coeff) -> Self {
        let mut e = Self::zero(dim);
        e.add_term(Monomial::one(), c);
        e
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, real(1, 1))
    }

    pub fn factor(dim: usize, f: Factor) -> Self {
        let mut e = Self::zero(dim);
        e.add_term(Monomial::from_factors(vec![f]), real(1, 1));
        e
    }

    /// The bare field `u`.
    pub fn u(dim: usize) -> Self {
        Self::factor(dim, Factor::u())
    }

    /// The bare conjugate `ū`.
    pub fn ubar(dim: usize) -> Self {
        Self::factor(dim, Factor::ubar())
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Monomial, Coeff)>) -> Self {
        let mut e = Self::zero(dim);
        for (m, c) in terms {
            e.add_term(m, c);
        }
        e
    }

    pub(crate) fn from_map(dim: usize, map: HashMap<Monomial, Coeff>) -> Self {
        SymExpr {
            dim,
            terms: map.into_iter().filter(|(_, c)| !is_zero(c)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn coeff_of(&self, m: &Monomial) -> Option<&Coeff> {
        self.terms.get(m)
    }

    pub fn add_term(&mut self, m: Monomial, c: Coeff) {
        if is_zero(&c) {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if is_zero(&sum) {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &SymExpr) -> SymExpr {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &SymExpr) -> SymExpr {
        self.add(&other.scale(&real(-1, 1)))
    }

    pub fn scale(&self, c: &Coeff) -> SymExpr {
        if is_zero(c) {
            return SymExpr::zero(self.dim);
        }
        SymExpr {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(m, a)| (m.clone(), a * c))
                .collect(),
        }
    }

    pub fn mul(&self, other: &SymExpr) -> SymExpr {
        let mut acc: HashMap<Monomial, Coeff> = HashMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                accumulate(&mut acc, ma.mul(mb), ca * cb);
            }
        }
        SymExpr::from_map(self.dim, acc)
    }

    pub fn pow(&self, n: usize) -> SymExpr {
        (0..n).fold(SymExpr::one(self.dim), |acc, _| acc.mul(self))
    }

    /// Complex conjugate: swaps u ↔ ū and conjugates coefficients.
    pub fn conj(&self) -> SymExpr {
        SymExpr {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.conjugate(), c.conj()))
                .collect(),
        }
    }

    /// Spatial derivative ∂_axis by the product rule.
    pub fn d_space(&self, axis: usize) -> SymExpr {
        assert!(axis < self.dim, "axis {axis} out of range for dim {}", self.dim);
        let mut acc: HashMap<Monomial, Coeff> = HashMap::new();
        for (m, c) in &self.terms {
            for (pos, f) in m.factors().iter().enumerate() {
                accumulate(&mut acc, m.replaced(pos, f.differentiate(axis, 1)), c.clone());
            }
        }
        SymExpr::from_map(self.dim, acc)
    }

    /// Apply ∂^α.
    pub fn d_multi(&self, alpha: [u8; 3]) -> SymExpr {
        let mut e = self.clone();
        for (axis, &n) in alpha.iter().enumerate().take(self.dim) {
            for _ in 0..n {
                e = e.d_space(axis);
            }
        }
        e
    }

    /// Laplacian Σ_j ∂_j².
    pub fn laplacian(&self) -> SymExpr {
        (0..self.dim).fold(SymExpr::zero(self.dim), |acc, j| {
            acc.add(&self.d_space(j).d_space(j))
        })
    }

    /// Largest per-factor spatial order over all monomials.
    pub fn max_factor_order(&self) -> usize {
        self.terms.keys().map(Monomial::max_order).max().unwrap_or(0)
    }

    /// Monomials with exactly `n` factors.
    pub fn with_factor_count(&self, n: usize) -> SymExpr {
        SymExpr {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.len() == n)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }
}

pub(crate) fn accumulate(acc: &mut HashMap<Monomial, Coeff>, m: Monomial, c: Coeff) {
    match acc.entry(m) {
        std::collections::hash_map::Entry::Vacant(v) => {
            v.insert(c);
        }
        std::collections::hash_map::Entry::Occupied(mut o) => {
            *o.get_mut() += c;
        }
    }
}

fn fmt_rat(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn fmt_coeff(c: &Coeff) -> String {
    match (c.re.is_zero(), c.im.is_zero()) {
        (false, true) => fmt_rat(&c.re),
        (true, false) => format!("{}i", fmt_rat(&c.im)),
        _ => {
            let sign = if c.im < BigRational::zero() { "-" } else { "+" };
            format!("({} {} {}i)", fmt_rat(&c.re), sign, fmt_rat(&c.im.abs()))
        }
    }
}

impl Factor {
    fn render(&self, dim: usize) -> String {
        let base = if self.conj { "ū" } else { "u" };
        if self.order == 0 {
            return base.to_string();
        }
        let idx: Vec<String> = self.alpha[..dim].iter().map(|a| a.to_string()).collect();
        format!("{}[{}]", base, idx.join(","))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.render(f, 3)
    }
}

impl Monomial {
    fn render(&self, f: &mut fmt::Formatter<'_>, dim: usize) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.0.iter().map(|x| x.render(dim)).collect();
        write!(f, "{}", parts.join("·"))
    }
}

/// Deterministic text form: one `coeff * monomial` per term, joined by ` + `,
/// in canonical monomial order. `u[a,b]` is ∂_x^a ∂_y^b u; `ū` is the conjugate.
impl fmt::Display for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (m, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{} * ", fmt_coeff(c))?;
            m.render(f, self.dim)?;
        }
        Ok(())
    }
}
