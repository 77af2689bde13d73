use super::*;
use crate::chern::{constant, product, tau_only, Axis, DecayClass, Field, FnFamily, ParamDomain, SuspendedFamily};
use crate::eta::RegularizedTraceConfig;
use crate::fixtures::{case_rng, standard_loop, TrigSeries};
use crate::linalg::{self, CMatrix, C64};
use crate::opcore::MatrixData;
use crate::suspend::TauGrid;

fn cfg() -> RegularizedTraceConfig {
    RegularizedTraceConfig::default()
}

fn scalar(x: f64) -> CMatrix {
    CMatrix::from_element(1, 1, C64::new(x, 0.0))
}

fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(values.len(), values.iter().map(|&v| C64::new(v, 0.0))))
}

fn sine_family(n: usize) -> OddFamily {
    let base = FnFamily::new(1, |y: &[f64]| scalar(y[0].sin())).with_partials(|y: &[f64], _| scalar(y[0].cos())).into_field();
    OddFamily::hermitian(ParamDomain::circle(n), TauGrid::default(), base).unwrap()
}

fn random_base(seed: u64, n: usize) -> Field {
    let mut rng = case_rng(seed, "bundle-base");
    let mut series = TrigSeries::random(&mut rng, n, 1, 2, 0.4);
    series.constant = diag(&(0..n).map(|k| if k % 2 == 0 { 0.3 } else { -0.4 }).collect::<Vec<_>>());
    let herm = |m: &CMatrix| (m + m.adjoint()) * C64::new(0.5, 0.0);
    for (_, a, b) in series.terms.iter_mut() {
        *a = herm(a);
        *b = herm(b);
    }
    let s2 = series.clone();
    FnFamily::new(n, move |y: &[f64]| series.eval(y)).with_partials(move |y: &[f64], k| s2.partial(y, k)).into_field()
}

fn random_family(seed: u64, n: usize, points: usize) -> OddFamily {
    OddFamily::hermitian(ParamDomain::circle(points), TauGrid::default(), random_base(seed, n)).unwrap()
}

fn loops(family: &OddFamily, w: i32) -> SuspendedFamily {
    SuspendedFamily::new(family.domain().clone(), family.grid().clone(), tau_only(standard_loop(family.size(), w), 1), DecayClass::Schwartz)
}

#[test]
fn zero_base_gets_a_gaussian_bump() {
    let fam = OddFamily::hermitian(ParamDomain::circle(4), TauGrid::default(), constant(scalar(0.0))).unwrap();
    let q = make_invertible_perturbation(&fam, 0).unwrap();
    assert!(!q.is_zero() && q.min_margin() > 1e-3);
    let field = q.q().unwrap();
    for &t in fam.grid().nodes() {
        let v = field.value(&[0.0, t])[(0, 0)];
        assert!(v.im.abs() < 1e-15 && v.re >= 0.0);
        assert!(v.re * v.re + t * t > 0.0);
    }
    let peak = field.value(&[1.0, 0.0])[(0, 0)].re;
    assert!((peak - q.strength() * 2f64.ln()).abs() < 1e-12);
}

#[test]
fn invertible_base_needs_no_perturbation() {
    let fam = OddFamily::hermitian(ParamDomain::circle(4), TauGrid::default(), constant(diag(&[0.5, -0.7]))).unwrap();
    let q = make_invertible_perturbation(&fam, 3).unwrap();
    assert!(q.is_zero());
    assert!((q.min_margin() - 0.5).abs() < 1e-3);
    assert!(q.q_at(0).unwrap().samples().iter().all(|m| linalg::max_abs(m) == 0.0));
}

#[test]
fn sine_family_clears_the_margin_everywhere() {
    let fam = sine_family(16);
    let q = make_invertible_perturbation(&fam, 0).unwrap();
    assert!(q.strength() > 0.1 && q.min_margin() > 1e-3, "{q:?}");
    let field = q.q().unwrap();
    let mut worst = f64::INFINITY;
    for y in fam.domain().points() {
        for k in 0..=2400 {
            let t = -6.0 + k as f64 * 0.005;
            let a = y[0].sin() + field.value(&[y[0], t])[(0, 0)].re;
            worst = worst.min((a * a + t * t).sqrt());
        }
    }
    assert!(worst > 0.5e-3, "{worst}");
    assert!(field.value(&[0.0, 0.0])[(0, 0)].re > 0.0);
}

#[test]
fn perturbation_width_depends_on_the_seed() {
    let fam = sine_family(8);
    let (a, b) = (make_invertible_perturbation(&fam, 1).unwrap(), make_invertible_perturbation(&fam, 2).unwrap());
    let x = [0.0, 0.7];
    assert!(linalg::max_abs(&(a.q().unwrap().value(&x) - b.q().unwrap().value(&x))) > 1e-6);
}

#[test]
fn bump_partials_match_differences() {
    let fam = random_family(4, 2, 8);
    let cfg = PerturbationConfig { margin_floor: 10.0, max_steps: 1, ..PerturbationConfig::default() };
    assert!(matches!(make_invertible_perturbation_with(&fam, 0, &cfg), Err(BundleError::Budget { steps: 1, .. })));
    let cfg = PerturbationConfig { margin_floor: 0.45, ..PerturbationConfig::default() };
    let q = make_invertible_perturbation_with(&fam, 0, &cfg).unwrap();
    let field = q.q().unwrap();
    assert!(field.has_partials());
    let x = [0.9, 0.3];
    for axis in 0..2 {
        let fd = crate::chern::central_difference(field.as_ref(), &x, axis, 1e-5);
        assert!(linalg::max_abs(&(field.partial(&x, axis).unwrap() - fd)) < 1e-8);
    }
}

#[test]
fn non_hermitian_bases_are_rejected() {
    let m = CMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.3, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]);
    let err = OddFamily::hermitian(ParamDomain::circle(4), TauGrid::default(), constant(m)).unwrap_err();
    assert!(matches!(err, BundleError::NotHermitian { point: 0, .. }));
}

#[test]
fn general_families_are_only_accepted_when_invertible() {
    let dom = ParamDomain::circle(4);
    let ok = OddFamily::general(crate::eta::EllipticFamily::constant(dom.clone(), TauGrid::default(), diag(&[1.0, -2.0]))).unwrap();
    assert!(make_invertible_perturbation(&ok, 0).unwrap().is_zero());
    let bad = OddFamily::general(crate::eta::EllipticFamily::constant(dom, TauGrid::default(), diag(&[0.0, 1.0]))).unwrap();
    assert!(matches!(make_invertible_perturbation(&bad, 0), Err(BundleError::Unsupported(_))));
}

#[test]
fn transition_of_a_section_with_itself_is_trivial() {
    let fam = sine_family(8);
    let q = make_invertible_perturbation(&fam, 0).unwrap();
    let t = transition(&q, &q).unwrap();
    for y in fam.domain().points() {
        for &tau in fam.grid().nodes().iter().step_by(7) {
            let v = t.field().value(&[y[0], tau]);
            assert!(linalg::max_abs(&(v - linalg::identity(1))) < 1e-12);
        }
    }
}

#[test]
fn transition_to_the_zero_section_solves_pointwise() {
    let fam = random_family(5, 2, 6);
    let q2 = make_invertible_perturbation(&fam, 0).unwrap();
    assert!(q2.is_zero());
    let q1 = independent_section(&q2, 9).unwrap();
    let t = transition(&q1, &q2).unwrap();
    for y in fam.domain().points() {
        for &tau in fam.grid().nodes().iter().step_by(5) {
            let a = fam.value(&y, tau);
            let a1 = q1.perturbed().value(&y, tau);
            let lhs = t.field().value(&[y[0], tau]) * &a;
            assert!(linalg::max_abs(&(lhs - a1)) < 1e-10);
        }
    }
    let other = random_family(5, 2, 6);
    let q3 = make_invertible_perturbation(&other, 0).unwrap();
    assert!(matches!(transition(&q1, &q3), Err(BundleError::Mismatch(_))));
}

#[test]
fn transitions_form_a_cocycle() {
    let fam = sine_family(8);
    let q1 = make_invertible_perturbation(&fam, 0).unwrap();
    let q2 = independent_section(&q1, 11).unwrap();
    let q3 = make_invertible_perturbation(&fam, 5).unwrap();
    let (t12, t23, t13) = (transition(&q1, &q2).unwrap(), transition(&q2, &q3).unwrap(), transition(&q1, &q3).unwrap());
    let composed = product(t12.field().clone(), t23.field().clone());
    let mut worst = 0.0f64;
    for y in fam.domain().points() {
        for &tau in fam.grid().nodes() {
            let x = [y[0], tau];
            worst = worst.max(linalg::max_abs(&(composed.value(&x) - t13.field().value(&x))));
        }
    }
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn identity_action_keeps_the_section() {
    let fam = sine_family(8);
    let q = make_invertible_perturbation(&fam, 0).unwrap();
    let id = SuspendedFamily::new(fam.domain().clone(), fam.grid().clone(), constant(linalg::identity(1)), DecayClass::Schwartz);
    let acted = left_action(&id, &q).unwrap();
    for y in fam.domain().points() {
        for &tau in fam.grid().nodes().iter().step_by(9) {
            let x = [y[0], tau];
            assert!(linalg::max_abs(&(acted.q().unwrap().value(&x) - q.q().unwrap().value(&x))) < 1e-12);
        }
    }
    assert!((acted.min_margin() - q.min_margin()).abs() < 1e-12);
}

#[test]
fn winding_loops_shift_eta_by_their_winding() {
    let fam = sine_family(6);
    let q = make_invertible_perturbation(&fam, 0).unwrap();
    let base = q.eta(&cfg()).unwrap().zero_values();
    for w in [1, -2] {
        let shifted = left_action(&loops(&fam, w), &q).unwrap().eta(&cfg()).unwrap().zero_values();
        for (a, b) in base.iter().zip(&shifted) {
            assert!((b - a - w as f64).norm() < 1e-7, "{w}: {a} {b}");
        }
    }
}

#[test]
fn constant_family_has_constant_index_section() {
    let fam = OddFamily::hermitian(ParamDomain::circle(8), TauGrid::default(), constant(diag(&[0.8, -1.1]))).unwrap();
    let q = make_invertible_perturbation(&fam, 0).unwrap();
    let s = delooping_section(&fam, &q).unwrap();
    let g0 = s.element(0).unwrap();
    for k in 1..8 {
        assert!(linalg::max_abs(&(s.element(k).unwrap().value() - g0.value())) < 1e-12);
    }
    assert!(s.winding().unwrap().abs() < 1e-12);
}

#[test]
fn delooping_path_runs_from_identity_to_the_index_section() {
    let fam = random_family(6, 2, 8);
    let q = make_invertible_perturbation(&fam, 0).unwrap();
    let s = delooping_section(&fam, &q).unwrap();
    let nodes = fam.grid().nodes();
    for (k, y) in fam.domain().points().enumerate() {
        let first = s.path.field().value(&[y[0], nodes[0]]);
        let last = s.path.field().value(&[y[0], *nodes.last().unwrap()]);
        assert!(linalg::max_abs(&(first - linalg::identity(2))) < 1e-12);
        assert!(linalg::max_abs(&(last - s.element(k).unwrap().value())) < 1e-12);
    }
    let w = s.winding().unwrap();
    assert!((w - w.round()).abs() < 1e-6, "{w}");
}

#[test]
fn loop_action_leaves_the_index_section_class() {
    let fam = sine_family(16);
    let q = make_invertible_perturbation(&fam, 0).unwrap();
    let twisted = fam.twisted(tau_only(standard_loop(1, 1), 1)).unwrap();
    let qt = make_invertible_perturbation(&twisted, 0).unwrap();
    let (w0, w1) = (delooping_section(&fam, &q).unwrap().winding().unwrap(), delooping_section(&twisted, &qt).unwrap().winding().unwrap());
    assert!(w0.abs() < 1e-6 && w1.abs() < 1e-6, "{w0} {w1}");
}

#[test]
fn constant_family_has_vanishing_index() {
    let fam = OddFamily::hermitian(ParamDomain::circle(6), TauGrid::default(), constant(diag(&[2.0, -3.0]))).unwrap();
    let chk = index_theorem_check_with(&fam, &IndexConfig::default()).unwrap();
    assert!(chk.lhs.norm() < 1e-12 && chk.rhs.norm() < 1e-12);
    assert!(chk.eta0.iter().all(|z| z.norm() < 1e-6));
    assert!(chk.tau_winding.abs() < 1e-9);
}

#[test]
fn twisted_circle_family_has_integral_index() {
    let fam = sine_family(12).twisted(tau_only(standard_loop(1, 1), 1)).unwrap();
    let chk = index_theorem_check_with(&fam, &IndexConfig::default()).unwrap();
    assert!(chk.integrality() < 1e-5, "{chk:?}");
    assert!((chk.tau_winding - chk.lhs.re).abs() < 1e-5);
    let plain = index_theorem_check_with(&sine_family(12), &IndexConfig::default()).unwrap();
    for (a, b) in plain.eta0.iter().zip(&chk.eta0) {
        assert!((b - a - 1.0).norm() < 1e-7, "{a} {b}");
    }
}

#[test]
fn index_form_is_basic() {
    let fam = random_family(7, 2, 12);
    let q1 = make_invertible_perturbation(&fam, 0).unwrap();
    let q2 = independent_section(&q1, 3).unwrap();
    let r = basicness_residual(&q1, &q2, &cfg()).unwrap();
    assert!(r < 1e-6, "{r}");
}

#[test]
fn unwrapping_counts_turns() {
    let values: Vec<C64> = (0..40).map(|k| C64::from_polar(1.0, -3.0 * std::f64::consts::TAU * k as f64 / 40.0)).collect();
    assert!((unwrapped_winding(&values) + 3.0).abs() < 1e-12);
}

#[test]
fn json_blocks_interpolate_on_the_circle() {
    let n = 10;
    let domain = ParamDomain::circle(n);
    let blocks: Vec<MatrixData> = domain
        .points()
        .map(|y| MatrixData::from(&diag(&[y[0].cos() + 0.2 * (2.0 * y[0]).sin(), -0.5])))
        .collect();
    let json = OddFamilyJson { n: 2, axes: vec![Axis::circle(n)], blocks: Some(blocks), poly: None, seed: 4 };
    let text = serde_json::to_string(&json).unwrap();
    assert!(text.contains("\"N\":2"));
    let back: OddFamilyJson = serde_json::from_str(&text).unwrap();
    let fam = OddFamily::from_json(&back, TauGrid::default()).unwrap();
    assert_eq!(fam.seed(), 4);
    let base = fam.base().unwrap();
    for y in [0.1, 1.3, 4.0] {
        let v = base.value(&[y]);
        assert!((v[(0, 0)].re - (y.cos() + 0.2 * (2.0 * y).sin())).abs() < 1e-12);
        let d = base.partial(&[y], 0).unwrap();
        assert!((d[(0, 0)].re - (-y.sin() + 0.4 * (2.0 * y).cos())).abs() < 1e-12);
        assert!(linalg::hermitian_deviation(&v) < 1e-14);
    }
}

#[test]
fn json_poly_families_and_schema_errors() {
    let text = r#"{"N":1,"axes":[{"kind":"periodic","start":0.0,"end":6.283185307179586,"n":8}],
        "poly":{"constant":{"n":1,"data":[[0.0,0.0]]},"terms":[{"k":[1.0],"cos":{"n":1,"data":[[0.0,0.0]]},"sin":{"n":1,"data":[[1.0,0.0]]}}]}}"#;
    let json: OddFamilyJson = serde_json::from_str(text).unwrap();
    let fam = OddFamily::from_json(&json, TauGrid::default()).unwrap();
    assert!((fam.base().unwrap().value(&[0.5])[(0, 0)].re - 0.5f64.sin()).abs() < 1e-15);
    let mut both = json.clone();
    both.blocks = Some(vec![]);
    assert!(matches!(OddFamily::from_json(&both, TauGrid::default()), Err(BundleError::Fixture(_))));
    let mut wrong = json;
    wrong.n = 2;
    assert!(matches!(OddFamily::from_json(&wrong, TauGrid::default()), Err(BundleError::Fixture(_))));
}
