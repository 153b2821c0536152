//! Canonical representatives of integrands modulo exact divergences.
//!
//! Integrands split into classes by (number of u factors, number of ū
//! factors, summed multi-index); `∂_a` preserves the counts and raises the
//! multi-index by `e_a`, so the divergences ∂_a(M) with M in class D − e_a
//! span every relation inside class D. Each class is reduced against an
//! echelon basis of those relations whose pivots are the "worst" columns:
//! largest per-factor order profile first. The remainder is unique, so equal
//! integrals give equal normal forms, and it carries the smallest attainable
//! factor orders.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::expr::{Coeff, Factor, Monomial, SymExpr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct ClassKey {
    dim: usize,
    nu: usize,
    nv: usize,
    degree: [u8; 3],
}

impl ClassKey {
    fn of(dim: usize, m: &Monomial) -> Self {
        let (nu, nv) = m.counts();
        ClassKey {
            dim,
            nu,
            nv,
            degree: m.multidegree(),
        }
    }
}

type Row = BTreeMap<usize, BigRational>;

struct ClassBasis {
    columns: Vec<Monomial>,
    rank: HashMap<Monomial, usize>,
    /// Rows keyed by pivot; a row's pivot is its smallest column index.
    rows: HashMap<usize, Row>,
}

/// Sorted-descending per-factor orders.
fn profile(m: &Monomial) -> Vec<usize> {
    let mut v: Vec<usize> = m.factors().iter().map(Factor::order).collect();
    v.sort_unstable_by(|a, b| b.cmp(a));
    v
}

/// Sub-multi-indices of `budget` in the first `dim` axes.
fn sub_indices(budget: [u8; 3], dim: usize) -> Vec<[u8; 3]> {
    let mut out = vec![[0u8; 3]];
    for a in 0..dim {
        out = out
            .into_iter()
            .flat_map(|base| {
                (0..=budget[a]).map(move |v| {
                    let mut x = base;
                    x[a] = v;
                    x
                })
            })
            .collect();
    }
    out
}

fn minus(a: [u8; 3], b: [u8; 3]) -> [u8; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Non-decreasing factor sequences of one conjugation type summing to `budget`.
fn partitions(
    budget: [u8; 3],
    count: usize,
    conj: bool,
    dim: usize,
    min: Option<Factor>,
    cur: &mut Vec<Factor>,
    out: &mut Vec<Vec<Factor>>,
) {
    if count == 0 {
        if budget == [0; 3] {
            out.push(cur.clone());
        }
        return;
    }
    let total: usize = budget.iter().map(|&b| b as usize).sum();
    if count == 1 {
        let f = Factor::new(conj, budget);
        if min.is_none_or(|m| f >= m) {
            cur.push(f);
            out.push(cur.clone());
            cur.pop();
        }
        return;
    }
    for alpha in sub_indices(budget, dim) {
        let f = Factor::new(conj, alpha);
        if min.is_some_and(|m| f < m) || f.order() * count > total {
            continue;
        }
        cur.push(f);
        partitions(minus(budget, alpha), count - 1, conj, dim, Some(f), cur, out);
        cur.pop();
    }
}

fn class_monomials(key: &ClassKey) -> Vec<Monomial> {
    let mut out = Vec::new();
    for du in sub_indices(key.degree, key.dim) {
        let mut us = Vec::new();
        partitions(du, key.nu, false, key.dim, None, &mut Vec::new(), &mut us);
        if us.is_empty() {
            continue;
        }
        let mut vs = Vec::new();
        let dv = minus(key.degree, du);
        partitions(dv, key.nv, true, key.dim, None, &mut Vec::new(), &mut vs);
        for u in &us {
            for v in &vs {
                let mut f = u.clone();
                f.extend_from_slice(v);
                out.push(Monomial::from_factors(f));
            }
        }
    }
    out
}

/// Eliminate every pivot column of `v`, scanning columns in increasing order.
fn reduce<T>(
    rows: &HashMap<usize, Row>,
    v: &mut BTreeMap<usize, T>,
    axpy: impl Fn(&mut T, &T, &BigRational),
    is_zero: impl Fn(&T) -> bool,
    zero: impl Fn() -> T,
) where
    T: Clone,
{
    let mut cursor = 0;
    loop {
        let hit = v
            .range(cursor..)
            .find(|(c, _)| rows.contains_key(c))
            .map(|(c, x)| (*c, x.clone()));
        let Some((col, x)) = hit else { break };
        for (j, r) in &rows[&col] {
            let entry = v.entry(*j).or_insert_with(&zero);
            axpy(entry, &x, r);
            if is_zero(entry) {
                v.remove(j);
            }
        }
        cursor = col + 1;
    }
}

impl ClassBasis {
    fn build(key: &ClassKey) -> Self {
        let mut columns = class_monomials(key);
        columns.sort_by(|a, b| profile(b).cmp(&profile(a)).then_with(|| b.cmp(a)));
        let rank: HashMap<Monomial, usize> =
            columns.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let mut basis = ClassBasis {
            columns,
            rank,
            rows: HashMap::new(),
        };
        for a in 0..key.dim {
            if key.degree[a] == 0 {
                continue;
            }
            let mut lower = key.degree;
            lower[a] -= 1;
            let sub = ClassKey { degree: lower, ..*key };
            for m in class_monomials(&sub) {
                let mut row: Row = BTreeMap::new();
                for (pos, f) in m.factors().iter().enumerate() {
                    let col = basis.rank[&m.replaced(pos, f.differentiate(a, 1))];
                    *row.entry(col).or_insert_with(BigRational::zero) += BigRational::one();
                }
                row.retain(|_, x| !x.is_zero());
                basis.insert(row);
            }
        }
        basis
    }

    fn insert(&mut self, mut row: Row) {
        reduce(
            &self.rows,
            &mut row,
            |e, x, r| *e -= x * r,
            |e| e.is_zero(),
            BigRational::zero,
        );
        let Some((&pivot, lead)) = row.iter().next() else {
            return;
        };
        let lead = lead.clone();
        for x in row.values_mut() {
            *x /= &lead;
        }
        self.rows.insert(pivot, row);
    }

    fn normalize(&self, terms: &[(&Monomial, &Coeff)]) -> Vec<(Monomial, Coeff)> {
        let mut v: BTreeMap<usize, Coeff> = terms
            .iter()
            .map(|(m, c)| (self.rank[*m], (*c).clone()))
            .collect();
        reduce(
            &self.rows,
            &mut v,
            |e, x, r| {
                e.re -= &x.re * r;
                e.im -= &x.im * r;
            },
            |e| e.re.is_zero() && e.im.is_zero(),
            || Coeff::new(BigRational::zero(), BigRational::zero()),
        );
        v.into_iter()
            .map(|(i, c)| (self.columns[i].clone(), c))
            .collect()
    }
}

fn basis_for(key: ClassKey) -> Arc<ClassBasis> {
    static CACHE: OnceLock<Mutex<HashMap<ClassKey, Arc<ClassBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(b) = cache.lock().expect("basis cache poisoned").get(&key) {
        return b.clone();
    }
    let built = Arc::new(ClassBasis::build(&key));
    cache
        .lock()
        .expect("basis cache poisoned")
        .entry(key)
        .or_insert(built)
        .clone()
}

/// Canonical integrand with the same integral over the torus as `e`.
pub fn ibp_normal_form(e: &SymExpr) -> SymExpr {
    let dim = e.dim();
    let mut classes: BTreeMap<(usize, usize, [u8; 3]), Vec<(&Monomial, &Coeff)>> = BTreeMap::new();
    for (m, c) in e.terms() {
        let k = ClassKey::of(dim, m);
        classes.entry((k.nu, k.nv, k.degree)).or_default().push((m, c));
    }
    let mut out = SymExpr::zero(dim);
    for ((nu, nv, degree), terms) in classes {
        let key = ClassKey { dim, nu, nv, degree };
        if degree == [0; 3] {
            for (m, c) in terms {
                out.add_term(m.clone(), c.clone());
            }
            continue;
        }
        for (m, c) in basis_for(key).normalize(&terms) {
            out.add_term(m, c);
        }
    }
    out
}
