use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::error::Error;
use crate::integrator::{trajectory, IntegratorKind, NlsParams};
use crate::spectral::{laplacian, Grid, GridSpec, SpectralField};
use crate::test_util::{random_field, smooth_random_field};

fn mono(fs: &[(bool, [u8; 3])]) -> Monomial {
    Monomial::from_factors(fs.iter().map(|&(c, a)| Factor::new(c, a)).collect())
}

fn grid2(n: usize) -> std::sync::Arc<Grid> {
    Grid::new(GridSpec::cube(2, n).unwrap()).unwrap()
}

/// `i Δu − i u²ū` built by hand.
fn dt_u_cubic(dim: usize) -> SymExpr {
    let mut e = SymExpr::zero(dim);
    for j in 0..dim {
        let mut a = [0; 3];
        a[j] = 2;
        e.add_term(mono(&[(false, a)]), imag(1, 1));
    }
    e.add_term(mono(&[(false, [0; 3]), (false, [0; 3]), (true, [0; 3])]), imag(-1, 1));
    e
}

#[test]
fn nonlinearity_monomials() {
    let e = nonlinearity_expr(3.0, 2).unwrap();
    assert_eq!(e.to_string(), "1 * u·u·ū");
    let e = nonlinearity_expr(5.0, 1).unwrap();
    assert_eq!(e.to_string(), "1 * u·u·u·ū·ū");
    assert!(matches!(nonlinearity_expr(2.0, 2), Err(Error::NonPolynomial(_))));
    assert!(matches!(nonlinearity_expr(2.5, 2), Err(Error::NonPolynomial(_))));
}

#[test]
fn derivative_of_u_is_the_equation() {
    for dim in 1..=3 {
        let dt = time_derivative(&SymExpr::u(dim), 3.0).unwrap();
        assert_eq!(dt, dt_u_cubic(dim));
        assert_eq!(dt, dt_power(1, 3.0, dim).unwrap());
    }
}

#[test]
fn density_derivative_drops_nonlinear_parts() {
    let dt = time_derivative(&density(2), 3.0).unwrap();
    let u = SymExpr::u(2);
    let expected = u
        .laplacian()
        .mul(&SymExpr::ubar(2))
        .scale(&imag(1, 1))
        .add(&u.mul(&SymExpr::ubar(2).laplacian()).scale(&imag(-1, 1)));
    assert_eq!(dt, expected);
}

#[test]
fn golden_text_form() {
    let e = dt_power(1, 3.0, 2).unwrap();
    assert_eq!(e.to_string(), "-1i * u·u·ū + 1i * u[0,2] + 1i * u[2,0]");
    let e = dt_power(1, 5.0, 1).unwrap();
    assert_eq!(e.to_string(), "-1i * u·u·u·ū·ū + 1i * u[2]");
    let e = density(1).scale(&coeff(rat(1, 2), rat(-3, 4)));
    assert_eq!(e.to_string(), "(1/2 - 3/4i) * u·ū");
    assert_eq!(SymExpr::zero(2).to_string(), "0");
}

#[test]
fn dt_power_cap_and_zero() {
    assert_eq!(dt_power(0, 3.0, 2).unwrap(), SymExpr::u(2));
    assert!(matches!(dt_power(4, 3.0, 2), Err(Error::PowerCap { .. })));
    assert!(matches!(
        time_derivative_capped(&laplacian_power(2, 1), 3.0, 4),
        Err(Error::OrderCap { order: 6, cap: 4 })
    ));
}

#[test]
fn leading_order_law() {
    for (dim, p, kmax) in [(1, 3.0, 3), (2, 3.0, 3), (2, 5.0, 2), (3, 3.0, 2)] {
        let pf = p as usize;
        for k in 1..=kmax {
            let e = dt_power(k, p, dim).unwrap();
            let linear: Vec<_> = e.terms().filter(|(m, _)| m.len() == 1).collect();
            let lead = laplacian_power(k, dim).scale(&i_pow(k));
            assert_eq!(linear.len(), lead.len(), "k={k} dim={dim}");
            for (m, c) in &linear {
                assert_eq!(lead.coeff_of(m), Some(*c));
            }
            for (m, _) in e.terms().filter(|(m, _)| m.len() != 1) {
                assert!(m.len() >= pf, "{m} has fewer than p factors");
                assert!(m.total_order() <= 2 * (k - 1), "{m} too many derivatives");
            }
        }
    }
}

#[test]
fn plane_wave_time_derivative() {
    let g = grid2(16);
    let a = Complex64::new(0.7, -0.4);
    let u = SpectralField::plane_wave(&g, &[2, -1], a).unwrap();
    let v = evaluate(&dt_power(1, 3.0, 2).unwrap(), &u).unwrap();
    let factor = Complex64::new(0.0, -(5.0 + a.norm_sqr()));
    let expected = u.scale(factor);
    assert!(v.sub(&expected).unwrap().coeff_norm() < 1e-13);
}

#[test]
fn evaluate_identity_and_linearity() {
    let g = grid2(16);
    let u = random_field(&g, 3, 1.0);
    let full = SpectralField::from_coeffs(&g, u.coeffs().iter().map(|c| c + 0.1).collect()).unwrap();
    assert!(evaluate(&SymExpr::u(2), &full).unwrap().sub(&full).unwrap().coeff_norm() < 1e-15);
    let lap = evaluate(&SymExpr::u(2).laplacian(), &full).unwrap();
    assert!(lap.sub(&laplacian(&full)).unwrap().coeff_norm() < 1e-12);

    let e1 = dt_power(2, 3.0, 2).unwrap();
    let e2 = hamiltonian_integrand(3.0, 2).unwrap();
    let a = coeff(rat(3, 2), rat(-1, 3));
    let lhs = evaluate(&e1.scale(&a).add(&e2), &u).unwrap();
    let rhs = evaluate(&e1, &u)
        .unwrap()
        .scale(to_c64(&a))
        .add(&evaluate(&e2, &u).unwrap())
        .unwrap();
    assert!(lhs.sub(&rhs).unwrap().coeff_norm() <= 1e-12 * (1.0 + rhs.coeff_norm()));
}

#[test]
fn integrate_matches_zero_mode() {
    let g = grid2(16);
    let u = random_field(&g, 4, 1.0);
    let e = hamiltonian_integrand(3.0, 2).unwrap();
    let a = integrate(&e, &u).unwrap();
    let b = evaluate(&e, &u).unwrap().coeffs()[0];
    assert!((a - b).norm() < 1e-13);
    assert!(a.im.abs() < 1e-14);
}

#[test]
fn single_integration_by_parts() {
    let u = SymExpr::u(2);
    let ub = SymExpr::ubar(2);
    let e = u.laplacian().mul(&ub).add(&grad_dot(&u, &ub));
    assert!(ibp_normal_form(&e).is_zero());
    let lap_u = u.laplacian().mul(&ub);
    let lap_v = u.mul(&ub.laplacian());
    assert_eq!(ibp_normal_form(&lap_u), ibp_normal_form(&lap_v));
    assert_eq!(ibp_normal_form(&lap_u), ibp_normal_form(&grad_dot(&u, &ub)).scale(&real(-1, 1)));
    // A total derivative of a single factor vanishes.
    assert!(ibp_normal_form(&u.d_space(1)).is_zero());
    // Constants and underived products are already normal.
    let c = density_power(2, 2);
    assert_eq!(ibp_normal_form(&c), c);
}

#[test]
fn normal_form_lowers_repeated_pivot() {
    // ∫ u ∂ū ū = −½ ∫ ∂u ū ū.
    let e = SymExpr::from_terms(1, [(mono(&[(false, [0; 3]), (true, [0; 3]), (true, [1, 0, 0])]), real(1, 1))]);
    let f = SymExpr::from_terms(1, [(mono(&[(false, [1, 0, 0]), (true, [0; 3]), (true, [0; 3])]), real(-1, 2))]);
    assert_eq!(ibp_normal_form(&e), ibp_normal_form(&f));
    assert_eq!(ibp_normal_form(&e).len(), 1);
}

#[test]
fn mass_and_hamiltonian_are_conserved_exactly() {
    for dim in 1..=3 {
        for p in [3.0, 5.0] {
            assert!(dt_of_functional(&mass_integrand(dim), p).unwrap().is_zero());
            let h = hamiltonian_integrand(p, dim).unwrap();
            let d = dt_of_functional(&h, p).unwrap();
            assert!(d.is_zero(), "dim={dim} p={p}: {d}");
        }
    }
    // The energy with weight 1/(p+1) on the potential is not conserved.
    let u = SymExpr::u(2);
    let half = grad_dot(&u, &u.conj()).add(&density_power(2, 2).scale(&real(1, 4)));
    assert!(!dt_of_functional(&half, 3.0).unwrap().is_zero());
}

#[test]
fn raw_dt_of_kinetic_term_reaches_fourth_order() {
    let w = dt_power(1, 3.0, 2).unwrap();
    let raw = time_derivative(&w.mul(&w.conj()), 3.0).unwrap();
    assert_eq!(raw.max_factor_order(), 4);
    let nf = ibp_normal_form(&raw);
    assert!(nf.max_factor_order() <= 2, "{}", nf.max_factor_order());
}

/// Central difference in time of `evaluate(dt_power(1))` against `evaluate(dt_power(2))`.
#[test]
fn second_time_derivative_matches_finite_differences() {
    // Content in |k| ≤ 5 on a 64² grid: every product is resolved.
    let g = grid2(64);
    let u0 = smooth_random_field(&grid2(16), 11, 0.8).resample(&g).unwrap();
    let dt = 1e-4;
    let params = NlsParams::new(2, 3.0, dt, 8e-4)
        .with_integrator(IntegratorKind::Rk4)
        .with_dealias(true);
    let traj = trajectory(&u0, &params, 1).unwrap();
    let w1 = dt_power(1, 3.0, 2).unwrap();
    let w2 = dt_power(2, 3.0, 2).unwrap();
    let mid = 4;
    let exact = evaluate(&w2, &traj.samples[mid].1).unwrap();
    let errs: Vec<f64> = [4usize, 2, 1]
        .iter()
        .map(|&j| {
            let h = j as f64 * dt;
            let plus = evaluate(&w1, &traj.samples[mid + j].1).unwrap();
            let minus = evaluate(&w1, &traj.samples[mid - j].1).unwrap();
            let fd = plus.sub(&minus).unwrap().scale(Complex64::new(0.5 / h, 0.0));
            fd.sub(&exact).unwrap().coeff_norm() / exact.coeff_norm()
        })
        .collect();
    assert!(errs[2] < 1e-5, "{errs:?}");
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() < 0.3, "{errs:?}");
    }
}

fn arb_factor(dim: usize) -> impl Strategy<Value = Factor> {
    (any::<bool>(), prop::collection::vec(0u8..3, dim)).prop_map(move |(c, a)| {
        let mut alpha = [0u8; 3];
        alpha[..a.len()].copy_from_slice(&a);
        Factor::new(c, alpha)
    })
}

fn arb_expr(dim: usize) -> impl Strategy<Value = SymExpr> {
    prop::collection::vec(
        (prop::collection::vec(arb_factor(dim), 1..4), -3i64..4, -3i64..4),
        1..4,
    )
    .prop_map(move |terms| {
        SymExpr::from_terms(
            dim,
            terms
                .into_iter()
                .map(|(fs, re, im)| (Monomial::from_factors(fs), coeff(rat(re, 1), rat(im, 2)))),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn leibniz_rule(a in arb_expr(2), b in arb_expr(2)) {
        let lhs = time_derivative(&a.mul(&b), 3.0).unwrap();
        let rhs = time_derivative(&a, 3.0).unwrap().mul(&b)
            .add(&a.mul(&time_derivative(&b, 3.0).unwrap()));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn conjugation_commutes(a in arb_expr(2), p in prop::sample::select(vec![3.0, 5.0])) {
        prop_assert_eq!(
            time_derivative(&a.conj(), p).unwrap(),
            time_derivative(&a, p).unwrap().conj()
        );
    }

    #[test]
    fn linearity(a in arb_expr(1), b in arb_expr(1)) {
        let lhs = time_derivative(&a.add(&b.scale(&imag(2, 3))), 3.0).unwrap();
        let rhs = time_derivative(&a, 3.0).unwrap()
            .add(&time_derivative(&b, 3.0).unwrap().scale(&imag(2, 3)));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn normal_form_is_idempotent(a in arb_expr(2)) {
        let nf = ibp_normal_form(&a);
        prop_assert_eq!(ibp_normal_form(&nf), nf.clone());
        // Adding a divergence does not change the normal form.
        let div = a.d_space(0).add(&a.d_space(1).scale(&imag(1, 1)));
        prop_assert_eq!(ibp_normal_form(&a.add(&div)), nf);
    }

    #[test]
    fn normal_form_preserves_integrals(a in arb_expr(2), seed in 0u64..1000) {
        let g = grid2(32);
        let u = smooth_random_field(&g, seed, 1.0);
        let lhs = integrate(&a, &u).unwrap();
        let rhs = integrate(&ibp_normal_form(&a), &u).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10, "{} vs {}", lhs, rhs);
    }
}
