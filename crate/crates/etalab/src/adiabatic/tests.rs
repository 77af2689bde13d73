use std::f64::consts::PI;
use std::sync::Arc;

use super::*;
use crate::chern::{constant, inverse, product, tau_only, DecayClass, Field, ParamDomain, SuspendedFamily};
use crate::fixtures::{
    case_rng, first_projector, random_epsilon, random_epsilon_family, random_epsilon_tangent, standard_loop, HalfOpenFamily,
};
use crate::linalg::{self, gauss_legendre, CMatrix, C64, I};

fn grid() -> BiGrid {
    BiGrid::default()
}

fn ds(seed: u64, name: &str) -> EpsilonElement {
    random_epsilon(&mut case_rng(seed, name), &grid(), 2, EpsilonClass::DoublySchwartz, 0.5)
}

fn scalar(v: f64) -> C64 {
    C64::new(v, 0.0)
}

fn schwartz_tangent(g: &BiGrid, d0: Vec<CMatrix>, d1: Vec<CMatrix>) -> EpsilonElement {
    let n = d0[0].nrows();
    EpsilonElement::tangent(
        g.clone(),
        EpsilonClass::DoublySchwartz,
        d0,
        d1,
        vec![CMatrix::zeros(n, n); g.n_tau()],
        vec![CMatrix::zeros(n, n); g.n_tau()],
    )
    .unwrap()
}

#[test]
fn identity_is_a_unit() {
    let id = EpsilonElement::identity(grid(), 2);
    assert_eq!(star_multiply(&id, &id).unwrap().max_difference(&id), 0.0);
    assert_eq!(star_inverse(&id).unwrap().max_difference(&id), 0.0);
    let a = ds(1, "unit");
    assert!(star_multiply(&a, &id).unwrap().max_difference(&a) < 1e-15);
}

#[test]
fn slowly_decaying_elements_are_rejected() {
    let id = linalg::identity(2);
    let a = EpsilonElement::doubly_schwartz(grid(), 2, |t, _| &id * scalar(1.0 + (-t * t).exp()), |_, _| CMatrix::zeros(2, 2));
    assert!(matches!(a, Err(AdiabaticError::Decay { .. })));
}

#[test]
fn separated_variables_bracket() {
    let g = grid();
    let id = linalg::identity(2);
    let (f, df) = (|t: f64| (-t * t).exp(), |t: f64| -2.0 * t * (-t * t).exp());
    let (h, dh) = (|s: f64| (-(s - 0.4).powi(2)).exp(), |s: f64| -2.0 * (s - 0.4) * (-(s - 0.4).powi(2)).exp());
    let zero = vec![CMatrix::zeros(2, 2); g.len()];
    let a = schwartz_tangent(&g, g.sample(|t, tau| &id * scalar(f(t) * (-tau * tau).exp())), zero.clone());
    let b = schwartz_tangent(&g, g.sample(|t, tau| &id * scalar(h(tau) * (-t * t).exp())), zero);
    let c = star_multiply(&a, &b).unwrap();
    let worst = g
        .points()
        .zip(c.a1())
        .map(|((t, tau), m)| {
            let (at, atau) = (df(t) * (-tau * tau).exp(), f(t) * -2.0 * tau * (-tau * tau).exp());
            let (bt, btau) = (h(tau) * -2.0 * t * (-t * t).exp(), dh(tau) * (-t * t).exp());
            let expect = I * 0.5 * (at * btau - atau * bt);
            (m[(0, 0)] - expect).norm().max(m[(0, 1)].norm())
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn star_product_is_associative() {
    let (a, b, c) = (ds(1, "a"), ds(1, "b"), ds(1, "c"));
    let l = star_multiply(&star_multiply(&a, &b).unwrap(), &c).unwrap();
    let r = star_multiply(&a, &star_multiply(&b, &c).unwrap()).unwrap();
    assert!(l.max_difference(&r) < 1e-9);
}

#[test]
fn star_inverse_is_two_sided() {
    let id = EpsilonElement::identity(grid(), 2);
    let mut rng = case_rng(2, "inverse");
    for class in [EpsilonClass::DoublySchwartz, EpsilonClass::HalfOpen, EpsilonClass::DClass(1)] {
        let a = random_epsilon(&mut rng, &grid(), 2, class, 0.6);
        let inv = star_inverse(&a).unwrap();
        let (l, r) = (star_multiply(&a, &inv).unwrap(), star_multiply(&inv, &a).unwrap());
        assert!(l.max_difference(&id) < 1e-9 && r.max_difference(&id) < 1e-9, "{class:?}");
    }
}

#[test]
fn commuting_inverse_has_no_bracket_term() {
    let g = grid();
    let p = first_projector(2);
    let id = linalg::identity(2);
    let phi = |t: f64, tau: f64| 0.8 * (-t * t - (tau - 0.2).powi(2)).exp();
    let a = EpsilonElement::doubly_schwartz(g.clone(), 2, |t, tau| &id + &p * scalar(phi(t, tau)), |_, _| CMatrix::zeros(2, 2)).unwrap();
    let inv = star_inverse(&a).unwrap();
    let worst = g
        .points()
        .zip(inv.a0().iter().zip(inv.a1()))
        .map(|((t, tau), (b0, b1))| {
            let expect = &id - &p * scalar(phi(t, tau) / (1.0 + phi(t, tau)));
            linalg::max_abs(&(b0 - expect)).max(linalg::max_abs(b1))
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn gaussian_adiabatic_trace() {
    let g = grid();
    let a = schwartz_tangent(
        &g,
        vec![CMatrix::zeros(2, 2); g.len()],
        g.sample(|t, tau| linalg::identity(2) * scalar((-t * t - tau * tau).exp())),
    );
    assert!((adiabatic_trace(&a).unwrap() - 1.0).norm() < 1e-10);
    assert_eq!(adiabatic_trace(&EpsilonElement::identity(g, 2)).unwrap(), C64::new(0.0, 0.0));
}

#[test]
fn commutators_are_traceless_only_with_the_corrected_bracket() {
    let (a, b) = (ds(3, "a"), ds(3, "b"));
    assert!(commutator_trace(&a, &b, Bracket::Td9).unwrap().norm() < 1e-9);
    assert!(commutator_trace(&a, &b, Bracket::Verbatim).unwrap().norm() > 1e-4);
    assert_eq!("verbatim".parse::<Bracket>().unwrap(), Bracket::Verbatim);
    assert_eq!(Bracket::default().to_string(), "td9");
    assert!("moyal".parse::<Bracket>().is_err());
}

#[test]
fn trace_defect_matches_boundary_pairing() {
    let g = grid();
    let id = EpsilonElement::identity(g.clone(), 2);
    let (a, b) = (ds(4, "a"), ds(4, "b"));
    let (l, r) = trace_defect(&a, &b).unwrap();
    assert!(l.norm() < 1e-9 && r.norm() < 1e-9);
    let mut rng = case_rng(4, "extended");
    let x = random_epsilon(&mut rng, &g, 2, EpsilonClass::HalfOpen, 0.6);
    let (l0, r0) = trace_defect(&x, &id).unwrap();
    assert!(l0.norm() < 1e-14 && r0.norm() < 1e-14);
    let y = random_epsilon(&mut rng, &g, 2, EpsilonClass::HalfOpen, 0.6);
    let (l, r) = trace_defect(&x, &y).unwrap();
    assert!(l.norm() > 1e-4 && (l - r).norm() < 1e-7, "{l} {r}");
    let (l, r) = trace_defect(&x, &ds(5, "b")).unwrap();
    assert!((l - r).norm() < 1e-7, "{l} {r}");
}

#[test]
fn trace_defect_sees_both_ends_for_opposite_index_classes() {
    let g = grid();
    let mut rng = case_rng(5, "d-class");
    let x = random_epsilon(&mut rng, &g, 2, EpsilonClass::DClass(1), 0.5);
    let y = random_epsilon(&mut rng, &g, 2, EpsilonClass::DClass(-1), 0.5);
    let (l, r) = trace_defect(&x, &y).unwrap();
    assert!((l - r).norm() < 1e-7, "{l} {r}");
}

#[test]
fn alpha_vanishes_on_zero_directions() {
    let a = ds(6, "a");
    let g = a.grid().clone();
    let zero = schwartz_tangent(&g, vec![CMatrix::zeros(2, 2); g.len()], vec![CMatrix::zeros(2, 2); g.len()]);
    assert_eq!(alpha_form(&a, &[zero]).unwrap()[0], C64::new(0.0, 0.0));
}

#[test]
fn alpha_matches_abelian_reduction() {
    let g = grid();
    let p = first_projector(2);
    let id = linalg::identity(2);
    let c = 0.7;
    let psi = |t: f64, tau: f64| (1.0 + 0.3 * t) * (-t * t - 0.5 * tau * tau).exp();
    let phi = |t: f64, tau: f64| (-(t - 0.3).powi(2) - tau * tau).exp();
    let a = EpsilonElement::doubly_schwartz(
        g.clone(),
        2,
        |t, tau| &id + &p * scalar((c * psi(t, tau)).exp() - 1.0),
        |t, tau| &p * scalar(c * phi(t, tau)),
    )
    .unwrap();
    let da = schwartz_tangent(
        &g,
        g.sample(|t, tau| &p * scalar(psi(t, tau) * (c * psi(t, tau)).exp())),
        g.sample(|t, tau| &p * scalar(phi(t, tau))),
    );
    let nodes = gauss_legendre(160, -9.0, 9.0);
    let mut oracle = 0.0;
    for &(t, wt) in &nodes {
        for &(tau, ws) in &nodes {
            let (s, f) = (psi(t, tau), phi(t, tau));
            oracle += wt * ws * f * (-c * s).exp() * (1.0 - c * s);
        }
    }
    oracle /= 2.0 * PI;
    let value = alpha_form(&a, std::slice::from_ref(&da)).unwrap()[0];
    assert!((value - oracle).norm() < 1e-9, "{value} {oracle}");
    assert!((alpha_tilde(&a, &[da]).unwrap()[0] - value).norm() < 1e-9);
}

#[test]
fn alpha_tilde_restricts_to_alpha() {
    let a = ds(7, "a");
    let mut rng = case_rng(7, "da");
    let da: Vec<_> = (0..3).map(|_| random_epsilon_tangent(&mut rng, a.grid(), 2, EpsilonClass::DoublySchwartz, 0.5)).collect();
    for (x, y) in alpha_schwartz(&a, &da).unwrap().iter().zip(alpha_tilde(&a, &da).unwrap()) {
        assert!((x - y).norm() < 1e-9);
    }
}

#[test]
fn constant_path_has_unit_determinant() {
    let id = EpsilonElement::identity(grid(), 2);
    let path = PolygonPath::straight(id.clone(), id.clone());
    assert_eq!(adiabatic_determinant(&path, &DetConfig::default()).unwrap(), C64::new(1.0, 0.0));
    assert_eq!(det_ad(&id, &DetConfig::default()).unwrap(), C64::new(1.0, 0.0));
}

#[test]
fn determinant_is_multiplicative_and_path_independent() {
    let cfg = DetConfig::default();
    let (a, b) = (ds(8, "a"), ds(8, "b"));
    let (d1, d2, d12) = (det_ad(&a, &cfg).unwrap(), det_ad(&b, &cfg).unwrap(), det_ad(&star_multiply(&a, &b).unwrap(), &cfg).unwrap());
    assert!((d12 - d1 * d2).norm() < 1e-7, "{d12} {}", d1 * d2);
    let id = EpsilonElement::identity(grid(), 2);
    let detour = PolygonPath::new(vec![id, ds(8, "via"), a.clone()]).unwrap();
    assert!((adiabatic_determinant(&detour, &cfg).unwrap() - d1).norm() < 1e-7);
}

#[test]
fn inverse_path_cancels() {
    let cfg = DetConfig::default();
    let a = ds(9, "a");
    let id = EpsilonElement::identity(grid(), 2);
    let there = make_epsilon_path(&id, &a, &cfg).unwrap();
    let round = there.then(&there.reversed()).unwrap();
    assert!((adiabatic_determinant(&round, &cfg).unwrap() - 1.0).norm() < 1e-8);
    assert!(there.reversed().then(&PolygonPath::straight(a, id)).is_err());
}

#[test]
fn sphere_loops_are_integral() {
    let cfg = DetConfig { tol: 1e-7, ..DetConfig::default() };
    for orientation in [1.0, -1.0] {
        let v = line_integral(&SphereLoop::new(grid(), 1.0, orientation), &cfg).unwrap() / (2.0 * PI * I);
        assert!((v - orientation).norm() < 1e-6, "{v}");
    }
}

#[test]
fn delta_vanishes_in_degenerate_cases() {
    let g = grid();
    let mut rng = case_rng(10, "delta");
    let x = random_epsilon(&mut rng, &g, 2, EpsilonClass::HalfOpen, 0.6);
    let dx: Vec<_> = (0..2).map(|_| random_epsilon_tangent(&mut rng, &g, 2, EpsilonClass::HalfOpen, 0.5)).collect();
    let fixed = SliceJet {
        values: vec![linalg::identity(2) * scalar(2.0); g.n_tau()],
        directions: vec![vec![CMatrix::zeros(2, 2); g.n_tau()]; 2],
    };
    assert!(delta_correction(g.tau(), &SliceJet::boundary(&x, &dx), &fixed).unwrap().iter().all(|d| d.norm() < 1e-15));
    let schwartz = ds(10, "s");
    let sdirs: Vec<_> = (0..2).map(|_| random_epsilon_tangent(&mut rng, &g, 2, EpsilonClass::DoublySchwartz, 0.5)).collect();
    let chk = alpha_additivity_check(&schwartz, &sdirs, &x, &dx).unwrap();
    assert!(chk.delta.iter().all(|d| d.norm() < 1e-15));
    assert!(chk.residual() < 1e-7, "{}", chk.residual());
}

#[test]
fn alpha_tilde_is_additive_up_to_delta() {
    let g = grid();
    let mut rng = case_rng(11, "additivity");
    let x = random_epsilon(&mut rng, &g, 2, EpsilonClass::HalfOpen, 0.6);
    let y = random_epsilon(&mut rng, &g, 2, EpsilonClass::HalfOpen, 0.6);
    let dx: Vec<_> = (0..2).map(|_| random_epsilon_tangent(&mut rng, &g, 2, EpsilonClass::HalfOpen, 0.5)).collect();
    let dy: Vec<_> = (0..2).map(|_| random_epsilon_tangent(&mut rng, &g, 2, EpsilonClass::HalfOpen, 0.5)).collect();
    let chk = alpha_additivity_check(&x, &dx, &y, &dy).unwrap();
    assert!(chk.delta.iter().any(|d| d.norm() > 1e-4));
    assert!(chk.residual() < 1e-7, "{}", chk.residual());
}

#[test]
fn curvature_vanishes_for_trivial_families() {
    let g = grid();
    let dom = ParamDomain::torus(&[4, 4]).unwrap();
    let flat = lift_loop_family(dom.clone(), g.clone(), constant(linalg::identity(2)), 0).unwrap();
    let (l, r) = curvature_check(&flat).unwrap();
    assert!(l.max_abs() < 1e-12 && r.max_abs() < 1e-12);
    let fixed = lift_loop_family(dom, g, tau_only(standard_loop(2, 1), 2), 1).unwrap();
    let (l, r) = curvature_check(&fixed).unwrap();
    assert!(l.max_abs() < 1e-9 && r.max_abs() < 1e-12, "{} {}", l.max_abs(), r.max_abs());
    assert!(curvature_check(&fixed.on_domain(ParamDomain::circle(4))).is_err());
}

#[test]
fn curvature_matches_even_character() {
    let fam = random_epsilon_family(&mut case_rng(12, "curv"), ParamDomain::torus(&[8, 8]).unwrap(), grid(), 2, 1, 0.8);
    let (l, r) = curvature_check(&fam).unwrap();
    assert!(r.max_abs() > 1e-3);
    assert!(l.sub(&r).unwrap().max_abs() < 0.5 * r.max_abs());
}

fn half_open(dom: &ParamDomain, f: Field) -> SuspendedFamily {
    SuspendedFamily::new(dom.clone(), grid().tau().clone(), f, DecayClass::HalfOpen)
}

#[test]
fn gerbe_terms_vanish_on_the_diagonal() {
    let dom = ParamDomain::torus(&[4, 4]).unwrap();
    let a: Field = Arc::new(HalfOpenFamily::random(&mut case_rng(13, "gerbe"), 2, 2));
    let lift = lift_loop_family(dom.clone(), grid(), product(a.clone(), inverse(a.clone())), 0).unwrap();
    let chk = gerbe_bfield_check(&half_open(&dom, a.clone()), &half_open(&dom, a), &lift).unwrap();
    assert!(chk.curvature.max_abs() < 1e-9 && chk.b_field.max_abs() < 1e-9);
}

#[test]
fn gerbe_splitting_holds_for_a_loop_factor() {
    let dom = ParamDomain::torus(&[8, 8]).unwrap();
    let a: Field = Arc::new(HalfOpenFamily::random(&mut case_rng(14, "gerbe"), 2, 2));
    let b = product(tau_only(standard_loop(2, 1), 2), a.clone());
    let lift = lift_loop_family(dom.clone(), grid(), product(a.clone(), inverse(b.clone())), -1).unwrap();
    let chk = gerbe_bfield_check(&half_open(&dom, a.clone()), &half_open(&dom, b), &lift).unwrap();
    let scale = chk.curvature.max_abs();
    assert!(chk.residual().unwrap() < 0.5 * scale, "{} {scale}", chk.residual().unwrap());
    let other: Field = Arc::new(HalfOpenFamily::random(&mut case_rng(15, "gerbe"), 2, 2));
    assert!(matches!(
        gerbe_bfield_check(&half_open(&dom, a), &half_open(&dom, other), &lift),
        Err(AdiabaticError::FibreProduct { .. })
    ));
}

#[test]
fn curving_needs_three_axes() {
    let dom = ParamDomain::torus(&[4, 4]).unwrap();
    let a: Field = Arc::new(HalfOpenFamily::random(&mut case_rng(16, "curving"), 2, 2));
    assert!(curving_check(&half_open(&dom, a)).is_err());
}

#[test]
fn element_json_roundtrip() {
    let mut rng = case_rng(17, "json");
    let g = BiGrid::square(16, 2.0).unwrap();
    for class in [EpsilonClass::DoublySchwartz, EpsilonClass::HalfOpen, EpsilonClass::DClass(-2)] {
        let a = random_epsilon(&mut rng, &g, 2, class, 0.5);
        let text = serde_json::to_string(&a.to_json()).unwrap();
        let back = EpsilonElement::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.class(), class);
        assert!(back.max_difference(&a) < 1e-15);
    }
    let text = serde_json::to_string(&random_epsilon(&mut rng, &g, 2, EpsilonClass::DClass(3), 0.5).to_json()).unwrap();
    assert!(text.contains("\"class\":\"d-class\"") && text.contains("\"j\":3"), "{text}");
}

#[test]
fn index_shift_generator_has_unit_winding() {
    let s = IndexShiftElement::new(grid().tau().clone(), 2).unwrap();
    assert!((s.winding().unwrap() - 1.0).abs() < 1e-9);
    let (p, q) = (s.power(-2), s.power(2));
    for (x, y) in p.iter().zip(q.iter()) {
        assert!(linalg::max_abs(&(x * y - linalg::identity(2))) < 1e-12);
    }
}
