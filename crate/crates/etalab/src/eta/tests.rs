use std::f64::consts::PI;
use std::sync::Arc;

use super::*;
use crate::chern::{
    ch_even, ch_odd, constant, exterior_derivative, tau_only, DecayClass, Field, FnFamily, ParamDomain, SuspendedFamily,
};
use crate::fixtures::{case_rng, phase_element, random_hermitian, standard_loop, HalfOpenFamily, SchwartzFamily, TrigSeries};
use crate::linalg::{self, CMatrix, C64};
use crate::opcore::GroupElement;
use crate::suspend::{make_path, ramp, ramp_derivative, PathOptions, TauGrid};

fn cfg() -> RegularizedTraceConfig {
    RegularizedTraceConfig::default()
}

fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(values.len(), values.iter().map(|&v| C64::new(v, 0.0))))
}

#[test]
fn identity_path_has_zero_universal_eta() {
    let fam = SuspendedFamily::new(ParamDomain::torus(&[4, 4]).unwrap(), TauGrid::default(), constant(CMatrix::identity(2, 2)), DecayClass::HalfOpen);
    let eta = universal_eta(&fam).unwrap();
    assert_eq!(eta.forms().len(), 2);
    assert!(eta.forms().iter().all(|f| f.max_abs() == 0.0));
}

#[test]
fn phase_path_has_fractional_eta() {
    let theta_inf = 2.1;
    let path = FnFamily::new(2, move |x: &[f64]| phase_element(2, theta_inf * ramp(x[1])).0)
        .with_partials(move |x: &[f64], k| {
            if k == 0 {
                return CMatrix::zeros(2, 2);
            }
            phase_element(2, theta_inf * ramp(x[1])).1 * C64::new(theta_inf * ramp_derivative(x[1]), 0.0)
        })
        .into_field();
    let fam = SuspendedFamily::new(ParamDomain::circle(4), TauGrid::default(), path, DecayClass::HalfOpen);
    let eta = universal_eta(&fam).unwrap();
    for z in eta.zero_values() {
        assert!((z - C64::new(theta_inf / (2.0 * PI), 0.0)).norm() < 1e-10, "{z}");
    }
}

#[test]
fn universal_eta_restricts_to_even_character() {
    let mut rng = case_rng(1, "eta-schwartz");
    let field: Field = Arc::new(SchwartzFamily::random(&mut rng, 2, 2, 0.5));
    let loops = crate::chern::product(tau_only(standard_loop(2, 1), 2), field);
    let fam = SuspendedFamily::new(ParamDomain::torus(&[6, 6]).unwrap(), TauGrid::default(), loops, DecayClass::Schwartz);
    let eta = universal_eta(&fam).unwrap();
    let ch = ch_even(&fam).unwrap();
    for (e, c) in eta.forms().iter().zip(&ch) {
        assert!(e.sub(c).unwrap().max_abs() < 1e-7);
    }
    assert!(eta.zero_values().iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-7));
}

fn transgression_residual(n: usize) -> f64 {
    let mut rng = case_rng(2, "eta-d");
    let fam = SuspendedFamily::new(ParamDomain::circle(n), TauGrid::default(), Arc::new(HalfOpenFamily::random(&mut rng, 2, 1)), DecayClass::HalfOpen);
    let eta = universal_eta(&fam).unwrap();
    let d_eta = exterior_derivative(eta.zero_form()).unwrap();
    let ch = ch_odd(&fam.limit_family()).unwrap();
    d_eta.sub(&ch[0]).unwrap().max_abs()
}

#[test]
fn universal_eta_transgresses_odd_character() {
    let (coarse, fine) = (transgression_residual(16), transgression_residual(32));
    assert!(fine < 1e-2 && coarse / fine > 3.0, "{coarse} {fine}");
}

#[test]
fn fredholm_relation_holds() {
    let grid = TauGrid::default();
    let (l, r) = fredholm_relation_check(&make_path(&GroupElement::identity(2), &grid, PathOptions::default()).unwrap()).unwrap();
    assert!((l - 1.0).norm() < 1e-12 && (r - 1.0).norm() < 1e-12);
    let g = GroupElement::from_value(diag(&[2.0, 1.0])).unwrap();
    let (l, r) = fredholm_relation_check(&make_path(&g, &grid, PathOptions::default()).unwrap()).unwrap();
    assert!((l - 2.0).norm() < 1e-8 && (r - 2.0).norm() < 1e-8, "{l} {r}");
}

#[test]
fn winding_prefix_shifts_eta_by_one() {
    let grid = TauGrid::default();
    let mut rng = case_rng(3, "eta-prefix");
    let g = GroupElement::from_value(crate::fixtures::random_group_matrix(&mut rng, 2, 0.7)).unwrap();
    let path = make_path(&g, &grid, PathOptions::default()).unwrap();
    let s = standard_loop(2, 1);
    let values = path.values();
    let samples: Vec<CMatrix> = grid
        .nodes()
        .iter()
        .zip(&values)
        .map(|(&t, v)| s.value(&[t]) * v - linalg::identity(2))
        .collect();
    let composed = crate::suspend::HalfOpenElement::new(grid.clone(), samples, g.clone()).unwrap();
    let (e0, e1) = (universal_eta_zero(&path).unwrap(), universal_eta_zero(&composed).unwrap());
    assert!((e1 - e0 - 1.0).norm() < 1e-8, "{e0} {e1}");
    let (l, r) = fredholm_relation_check(&composed).unwrap();
    assert!((l - r).norm() < 1e-8 * r.norm());
}

#[test]
fn scalar_resolvent_has_half_sign_eta() {
    let domain = ParamDomain::circle(4);
    for lambda in [0.8, -1.7] {
        let fam = EllipticFamily::constant(domain.clone(), TauGrid::default(), diag(&[lambda]));
        let eta = family_eta(&fam, &cfg()).unwrap();
        for z in eta.zero_values() {
            assert!((z - C64::new(0.5 * lambda.signum(), 0.0)).norm() < 1e-8, "{lambda}: {z}");
        }
    }
}

#[test]
fn hermitian_eta_counts_signs() {
    let mut rng = case_rng(4, "eta-herm");
    let h = random_hermitian(&mut rng, 3, 1.0);
    let spectrum = crate::opcore::hermitian_spectrum(&h).unwrap();
    let expect: f64 = spectrum.iter().map(|l| 0.5 * l.signum()).sum();
    let fam = EllipticFamily::constant(ParamDomain::circle(4), TauGrid::default(), h);
    let eta = family_eta(&fam, &cfg()).unwrap();
    assert!((eta.zero_values()[0] - C64::new(expect, 0.0)).norm() < 1e-7);
    assert!(eta.zero_form_imag() < 1e-8);
}

fn hermitian_base(seed: u64, n: usize, dim: usize) -> Field {
    let mut rng = case_rng(seed, "eta-base");
    let mut series = TrigSeries::random(&mut rng, n, dim, 2, 0.3);
    series.constant = diag(&(0..n).map(|k| if k % 2 == 0 { 1.0 } else { -1.2 }).collect::<Vec<_>>());
    let herm = |m: &CMatrix| (m + m.adjoint()) * C64::new(0.5, 0.0);
    series.constant = herm(&series.constant);
    for (_, a, b) in series.terms.iter_mut() {
        *a = herm(a);
        *b = herm(b);
    }
    let s2 = series.clone();
    FnFamily::new(n, move |y: &[f64]| series.eval(y)).with_partials(move |y: &[f64], k| s2.partial(y, k)).into_field()
}

fn schwartz_perturbation(seed: u64, n: usize, dim: usize, amplitude: f64) -> Field {
    let mut rng = case_rng(seed, "eta-q");
    loop_perturbation(Arc::new(SchwartzFamily::random(&mut rng, n, dim, amplitude)))
}

#[test]
fn winding_loop_shifts_eta() {
    let domain = ParamDomain::torus(&[4, 4]).unwrap();
    let fam = EllipticFamily::linear(domain, TauGrid::default(), hermitian_base(5, 2, 2));
    let base = family_eta(&fam, &cfg()).unwrap();
    for w in [1, -2] {
        let shifted = family_eta(&fam.left_multiply(tau_only(standard_loop(2, w), 2)), &cfg()).unwrap();
        for (a, b) in base.zero_values().iter().zip(shifted.zero_values()) {
            assert!((b - a - w as f64).norm() < 1e-7, "{w}: {a} {b}");
        }
    }
}

#[test]
fn tau_invariant_examples() {
    let domain = ParamDomain::circle(4);
    let grid = TauGrid::default();
    let t = tau_invariant(&EllipticFamily::constant(domain.clone(), grid.clone(), diag(&[1.3])), &cfg()).unwrap();
    assert!((t[0] + 1.0).norm() < 1e-8);
    let t = tau_invariant(&EllipticFamily::constant(domain.clone(), grid.clone(), diag(&[1.0, -1.0])), &cfg()).unwrap();
    assert!((t[0] - 1.0).norm() < 1e-8);
}

#[test]
fn tau_invariant_is_multiplicative() {
    let domain = ParamDomain::circle(6);
    let grid = TauGrid::default();
    let a = EllipticFamily::linear(domain.clone(), grid.clone(), hermitian_base(6, 2, 1)).with_perturbation(schwartz_perturbation(7, 2, 1, 0.4));
    let b = EllipticFamily::linear(domain, grid, hermitian_base(8, 2, 1)).with_perturbation(schwartz_perturbation(9, 2, 1, 0.4));
    let ab = a.product(&b).unwrap();
    let (ta, tb, tab) = (tau_invariant(&a, &cfg()).unwrap(), tau_invariant(&b, &cfg()).unwrap(), tau_invariant(&ab, &cfg()).unwrap());
    for ((x, y), z) in ta.iter().zip(&tb).zip(&tab) {
        assert!((x * y - z).norm() < 1e-7, "{x} {y} {z}");
    }
}

#[test]
fn tau_invariant_ignores_perturbation() {
    let domain = ParamDomain::circle(6);
    let fam = EllipticFamily::linear(domain, TauGrid::default(), hermitian_base(10, 2, 1));
    let t0 = tau_invariant(&fam, &cfg()).unwrap();
    let t1 = tau_invariant(&fam.with_perturbation(schwartz_perturbation(11, 2, 1, 0.3)), &cfg()).unwrap();
    for (x, y) in t0.iter().zip(&t1) {
        assert!((x - y).norm() < 1e-8);
    }
}

#[test]
fn inverse_family_negates_eta() {
    let grid = TauGrid::default();
    let scalar = EllipticFamily::constant(ParamDomain::circle(4), grid.clone(), diag(&[0.9]));
    assert!(eta_inverse_check(&scalar, &cfg()).unwrap() < 1e-7);
    let id = EllipticFamily::constant(ParamDomain::circle(4), grid.clone(), CMatrix::identity(3, 3));
    let eta = family_eta(&id, &cfg()).unwrap();
    assert!((eta.zero_values()[0] - 1.5).norm() < 1e-8);
    assert!(eta_inverse_check(&id, &cfg()).unwrap() < 1e-7);
    let torus = EllipticFamily::linear(ParamDomain::torus(&[6, 6]).unwrap(), grid, hermitian_base(12, 2, 2))
        .with_perturbation(schwartz_perturbation(13, 2, 2, 0.3));
    assert!(eta_inverse_check(&torus, &cfg()).unwrap() < 1e-6);
}

#[test]
fn identical_pair_is_multiplicative() {
    let fam = EllipticFamily::linear(ParamDomain::torus(&[4, 4]).unwrap(), TauGrid::default(), hermitian_base(14, 2, 2));
    let r = eta_multiplicativity_check(&fam, &fam, &cfg()).unwrap();
    assert!(r.max() < 1e-9, "{r:?}");
}

#[test]
fn winding_pair_is_multiplicative() {
    let fam = EllipticFamily::linear(ParamDomain::torus(&[8, 8]).unwrap(), TauGrid::default(), hermitian_base(15, 2, 2));
    let twisted = fam.left_multiply(tau_only(standard_loop(2, 1), 2));
    let r = eta_multiplicativity_check(&fam, &twisted, &cfg()).unwrap();
    assert!((r.loop_index - 1.0).abs() < 1e-8 && r.max() < 1e-6, "{r:?}");
}

#[test]
fn random_perturbation_pair_is_multiplicative() {
    let base = EllipticFamily::linear(ParamDomain::torus(&[8, 8]).unwrap(), TauGrid::default(), hermitian_base(16, 2, 2));
    let a = base.with_perturbation(schwartz_perturbation(17, 2, 2, 0.3));
    let b = base.with_perturbation(schwartz_perturbation(18, 2, 2, 0.3));
    let r = eta_multiplicativity_check(&a, &b, &cfg()).unwrap();
    assert!(r.max() < 1e-5, "{r:?}");
}

#[test]
fn eta_differential_is_basic() {
    let base = EllipticFamily::linear(ParamDomain::torus(&[6, 6]).unwrap(), TauGrid::default(), hermitian_base(19, 2, 2));
    let e1 = family_eta(&base.with_perturbation(schwartz_perturbation(20, 2, 2, 0.3)), &cfg()).unwrap();
    let e2 = family_eta(&base.with_perturbation(schwartz_perturbation(21, 2, 2, 0.3)), &cfg()).unwrap();
    let d1 = exterior_derivative(e1.zero_form()).unwrap();
    let d2 = exterior_derivative(e2.zero_form()).unwrap();
    assert!(d1.sub(&d2).unwrap().max_abs() < 1e-6);
}

#[test]
fn eta_value_json_roundtrip() {
    let fam = EllipticFamily::linear(ParamDomain::torus(&[4, 4]).unwrap(), TauGrid::default(), hermitian_base(22, 2, 2));
    let eta = family_eta(&fam, &cfg()).unwrap();
    let json = serde_json::to_string(&eta.to_json()).unwrap();
    let back = EtaValue::from_json(eta.domain().clone(), &serde_json::from_str(&json).unwrap()).unwrap();
    assert_eq!(back, eta);
}

#[test]
fn formal_trace_vanishes_on_schwartz_and_constants() {
    let grid = TauGrid::default();
    let mut rng = case_rng(23, "formal");
    let c = crate::fixtures::random_matrix(&mut rng, 2, 1.0);
    let samples: Vec<CMatrix> = grid.nodes().iter().map(|&t| &c * C64::new((-t * t).exp(), 0.0)).collect();
    let schwartz = crate::suspend::ProductSuspendedElement::new(grid.clone(), vec![CMatrix::zeros(2, 2)], samples, (0, 0)).unwrap();
    assert!(formal_trace(&schwartz, &cfg()).unwrap().norm() < 1e-8);
    let model = crate::suspend::ProductSuspendedElement::hermitian_model(grid, c);
    // Tr(i Id) is constant: the regularized integral of a constant vanishes
    assert!(formal_trace(&model, &cfg()).unwrap().norm() < 1e-8);
}
