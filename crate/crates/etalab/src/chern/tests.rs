use std::sync::Arc;

use super::*;
use crate::fixtures::{self, case_rng, phase_loop, random_family, random_loop, standard_loop, SchwartzFamily};
use crate::linalg::{self, CMatrix, C64};
use crate::suspend::TauGrid;

fn unwrap_det_winding(field: &Field, samples: usize) -> f64 {
    let mut total = 0.0;
    let mut prev = linalg::determinant(&field.value(&[0.0]));
    for k in 1..=samples {
        let x = 2.0 * std::f64::consts::PI * k as f64 / samples as f64;
        let cur = linalg::determinant(&field.value(&[x]));
        total += (cur / prev).arg();
        prev = cur;
    }
    total / (2.0 * std::f64::consts::PI)
}

#[test]
fn constant_family_has_zero_character() {
    let fam = GroupFamily::new(ParamDomain::torus(&[6, 6, 6]).unwrap(), constant(CMatrix::identity(2, 2) * C64::new(2.0, 1.0)));
    for form in ch_odd(&fam).unwrap() {
        assert_eq!(form.max_abs(), 0.0);
    }
}

#[test]
fn phase_loop_has_unit_winding() {
    let fam = GroupFamily::new(ParamDomain::circle(64), phase_loop(3, 1));
    let forms = ch_odd(&fam).unwrap();
    assert!((forms[0].integrate(0) - C64::new(1.0, 0.0)).norm() < 1e-12);
    assert!((winding_number(&fam).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn constant_axis_drops_out() {
    let mut rng = case_rng(3, "constant-axis");
    let inner = random_family(&mut rng, 2, 2);
    let lifted = FnFamily::new(2, {
        let inner = inner.clone();
        move |x: &[f64]| inner.value(&[x[0], x[2]])
    })
    .with_partials(move |x: &[f64], k| match k {
        1 => CMatrix::zeros(2, 2),
        0 => inner.partial(&[x[0], x[2]], 0).unwrap(),
        _ => inner.partial(&[x[0], x[2]], 1).unwrap(),
    })
    .into_field();
    let fam = GroupFamily::new(ParamDomain::torus(&[5, 5, 5]).unwrap(), lifted);
    let forms = ch_odd(&fam).unwrap();
    let one = &forms[0];
    let c = one.component_index(&[1]).unwrap();
    assert!((0..one.domain().len()).all(|p| one.get(p, c) == C64::new(0.0, 0.0)));
    assert!(forms[1].max_abs() < 1e-15);
}

#[test]
fn winding_of_products_adds() {
    let product_loop = product(phase_loop(2, 1), random_loop(&mut case_rng(1, "w2"), 2, &[2], 0.2));
    let fam = GroupFamily::new(ParamDomain::circle(128), product_loop.clone());
    let w = winding_number(&fam).unwrap();
    let oracle = unwrap_det_winding(&product_loop, 4096);
    assert!((w - 3.0).abs() < 1e-6, "{w}");
    assert!((oracle - 3.0).abs() < 1e-9);
}

#[test]
fn constant_loop_has_zero_winding() {
    let fam = GroupFamily::new(ParamDomain::circle(16), constant(CMatrix::identity(3, 3)));
    assert_eq!(winding_number(&fam).unwrap(), 0.0);
}

#[test]
fn inversion_negates_character() {
    let mut rng = case_rng(5, "inversion");
    let f = random_family(&mut rng, 3, 3);
    let domain = ParamDomain::torus(&[5, 5, 5]).unwrap();
    let a = ch_odd(&GroupFamily::new(domain.clone(), f.clone())).unwrap();
    let b = ch_odd(&GroupFamily::new(domain, inverse(f))).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(x.add(y).unwrap().max_abs() < 1e-9);
    }
}

fn closedness_error(n: usize) -> f64 {
    let mut rng = case_rng(11, "closed");
    let f = random_family(&mut rng, 2, 2);
    let fam = GroupFamily::new(ParamDomain::torus(&[n, n]).unwrap(), f);
    exterior_derivative(&ch_odd(&fam).unwrap()[0]).unwrap().max_abs()
}

#[test]
fn degree_one_character_is_closed_at_second_order() {
    let (coarse, fine) = (closedness_error(16), closedness_error(32));
    assert!(coarse / fine >= 3.0, "{coarse} {fine}");
}

#[test]
fn identity_loop_family_has_zero_even_character() {
    let fam = SuspendedFamily::new(
        ParamDomain::torus(&[4, 4]).unwrap(),
        TauGrid::default(),
        constant(CMatrix::identity(2, 2)),
        DecayClass::Schwartz,
    );
    for form in ch_even(&fam).unwrap() {
        assert_eq!(form.max_abs(), 0.0);
    }
}

#[test]
fn standard_loop_has_unit_index() {
    let sl = standard_loop(2, 1);
    let field = FnFamily::new(2, {
        let sl = sl.clone();
        move |x: &[f64]| sl.value(&x[2..])
    })
    .with_partials(move |x: &[f64], k| if k == 2 { sl.partial(&x[2..], 0).unwrap() } else { CMatrix::zeros(2, 2) })
    .into_field();
    let fam = SuspendedFamily::new(ParamDomain::torus(&[4, 4]).unwrap(), TauGrid::default(), field, DecayClass::Schwartz);
    let forms = ch_even(&fam).unwrap();
    assert!(forms[0].data().iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-10));
    assert!(forms[1].max_abs() < 1e-14);
}

/// `(1 / (2 (2 pi i)^2)) int Tr(s^{-1} s_tau [X_i, X_j])` evaluated on its own.
fn curvature_oracle(field: &Field, y: &[f64], grid: &TauGrid) -> C64 {
    let c = C64::new(0.0, 2.0 * std::f64::consts::PI).powu(2) * 2.0;
    let integrand: Vec<C64> = grid
        .nodes()
        .iter()
        .map(|&t| {
            let x = [y[0], y[1], t];
            let inv = linalg::inverse(&field.value(&x)).unwrap();
            let xt = &inv * field.partial(&x, 2).unwrap();
            let x0 = &inv * field.partial(&x, 0).unwrap();
            let x1 = &inv * field.partial(&x, 1).unwrap();
            linalg::trace(&(xt * (&x0 * &x1 - &x1 * &x0))) / c
        })
        .collect();
    grid.quadrature(&integrand).unwrap()
}

#[test]
fn even_two_form_matches_curvature_formula() {
    let mut rng = case_rng(2, "curv");
    let field: Field = Arc::new(SchwartzFamily::random(&mut rng, 2, 2, 0.6));
    let grid = TauGrid::default();
    let domain = ParamDomain::torus(&[4, 4]).unwrap();
    let fam = SuspendedFamily::new(domain.clone(), grid.clone(), field.clone(), DecayClass::Schwartz);
    let forms = ch_even(&fam).unwrap();
    for p in 0..domain.len() {
        let oracle = curvature_oracle(&field, &domain.point(p), &grid);
        assert!((forms[1].get(p, 0) - oracle).norm() < 1e-8);
    }
}

#[test]
fn delta_even_vanishes_for_identity_factor() {
    let mut rng = case_rng(7, "delta-id");
    let domain = ParamDomain::torus(&[4, 4]).unwrap();
    let a = GroupFamily::new(domain.clone(), random_family(&mut rng, 2, 2));
    let b = GroupFamily::new(domain, constant(CMatrix::identity(2, 2)));
    for form in transgression_delta_even(&a, &b).unwrap() {
        assert!(form.max_abs() < 1e-14);
    }
}

#[test]
fn delta_even_vanishes_on_inverse_pairs() {
    let mut rng = case_rng(8, "delta-inv");
    let domain = ParamDomain::torus(&[4, 4]).unwrap();
    let f = random_family(&mut rng, 2, 2);
    let a = GroupFamily::new(domain.clone(), f.clone());
    let b = GroupFamily::new(domain, inverse(f));
    for form in transgression_delta_even(&a, &b).unwrap() {
        assert!(form.max_abs() < 1e-14, "{}", form.max_abs());
    }
}

fn multiplicativity_residual(n: usize) -> f64 {
    let mut rng = case_rng(9, "mult3");
    let (fa, fb) = (random_family(&mut rng, 2, 3), random_family(&mut rng, 2, 3));
    let domain = ParamDomain::torus(&[n, n, n]).unwrap();
    let a = GroupFamily::new(domain.clone(), fa.clone());
    let b = GroupFamily::new(domain.clone(), fb.clone());
    let ab = GroupFamily::new(domain, product(fa, fb));
    let delta = transgression_delta_even(&a, &b).unwrap();
    let lhs = ch_odd(&ab).unwrap()[1].sub(&ch_odd(&a).unwrap()[1]).unwrap().sub(&ch_odd(&b).unwrap()[1]).unwrap();
    lhs.sub(&exterior_derivative(&delta[1]).unwrap()).unwrap().max_abs()
}

#[test]
fn odd_character_is_multiplicative_up_to_exact_term() {
    let (coarse, fine) = (multiplicativity_residual(8), multiplicativity_residual(16));
    assert!(coarse / fine >= 3.0, "{coarse} {fine}");
}

fn even_multiplicativity_residual(n: usize) -> f64 {
    let mut rng = case_rng(10, "mult-even");
    let fa: Field = Arc::new(SchwartzFamily::random(&mut rng, 2, 2, 0.6));
    let fb: Field = Arc::new(SchwartzFamily::random(&mut rng, 2, 2, 0.6));
    let domain = ParamDomain::torus(&[n, n]).unwrap();
    let grid = TauGrid::new(64, 4.0).unwrap();
    let mk = |f: Field| SuspendedFamily::new(domain.clone(), grid.clone(), f, DecayClass::Schwartz);
    let (a, b, ab) = (mk(fa.clone()), mk(fb.clone()), mk(product(fa, fb)));
    let delta = transgression_delta_odd(&a, &b).unwrap();
    let lhs = ch_even(&ab).unwrap()[1].sub(&ch_even(&a).unwrap()[1]).unwrap().sub(&ch_even(&b).unwrap()[1]).unwrap();
    lhs.sub(&exterior_derivative(&delta).unwrap()).unwrap().max_abs()
}

#[test]
fn even_character_is_multiplicative_up_to_exact_term() {
    let (coarse, fine) = (even_multiplicativity_residual(8), even_multiplicativity_residual(16));
    assert!(coarse / fine >= 3.0, "{coarse} {fine}");
}

#[test]
fn loop_windings_add_under_products() {
    let mut rng = case_rng(12, "pair-circle");
    let fa = random_loop(&mut rng, 3, &[1, -2], 0.2);
    let fb = random_loop(&mut rng, 3, &[2], 0.2);
    let domain = ParamDomain::circle(64);
    let w = |f: Field| winding_number(&GroupFamily::new(domain.clone(), f)).unwrap();
    let (wa, wb, wab) = (w(fa.clone()), w(fb.clone()), w(product(fa, fb)));
    assert!((wa + 1.0).abs() < 1e-6 && (wb - 2.0).abs() < 1e-6 && (wab - 1.0).abs() < 1e-6);
}

#[test]
fn fixtures_validate() {
    let mut rng = case_rng(4, "validate");
    GroupFamily::new(ParamDomain::torus(&[8, 8]).unwrap(), random_family(&mut rng, 3, 2)).validate().unwrap();
    GroupFamily::new(ParamDomain::circle(32), random_loop(&mut rng, 3, &[1, 1], 0.3)).validate().unwrap();
    let _ = fixtures::first_projector(2);
}
