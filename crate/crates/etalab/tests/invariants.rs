use proptest::prelude::*;

use etalab::bundles::{independent_section, make_invertible_perturbation, transition, CircleInterpolant, OddFamily};
use etalab::chern::{product, winding_number, Axis, Field, GroupFamily, MatrixFamily, ParamDomain};
use etalab::eta::{family_eta, fredholm_relation_check, EllipticFamily, RegularizedTraceConfig};
use etalab::fixtures::{case_rng, hermitian_series_family, random_group_matrix, random_loop};
use etalab::linalg::{self, CMatrix, C64};
use etalab::opcore::GroupElement;
use etalab::suspend::{make_path, PathOptions, TauGrid};

fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(values.len(), values.iter().map(|&v| C64::new(v, 0.0))))
}

fn eigenvalue() -> impl Strategy<Value = f64> {
    prop_oneof![-3.0f64..-0.2, 0.2f64..3.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn windings_are_integral_and_add(seed in any::<u64>(), n in 1usize..4, w1 in -2i32..=2, w2 in -2i32..=2) {
        let mut rng = case_rng(seed, "winding");
        let a = random_loop(&mut rng, n, &[w1], 0.2);
        let b = random_loop(&mut rng, n, &[w2], 0.2);
        let domain = ParamDomain::circle(128);
        let w = |f: Field| winding_number(&GroupFamily::new(domain.clone(), f)).unwrap();
        let (wa, wb, wab) = (w(a.clone()), w(b.clone()), w(product(a, b)));
        prop_assert!((wa - w1 as f64).abs() < 1e-6, "{wa}");
        prop_assert!((wb - w2 as f64).abs() < 1e-6, "{wb}");
        prop_assert!((wab - wa - wb).abs() < 1e-6, "{wab}");
    }

    #[test]
    fn eta_counts_eigenvalue_signs(values in proptest::collection::vec(eigenvalue(), 1..5)) {
        let expect: f64 = values.iter().map(|l| 0.5 * l.signum()).sum();
        let fam = EllipticFamily::constant(ParamDomain::circle(4), TauGrid::default(), diag(&values));
        let z = family_eta(&fam, &RegularizedTraceConfig::default()).unwrap().zero_values()[0];
        prop_assert!((z - expect).norm() < 1e-6, "{z} {expect}");
    }

    #[test]
    fn fredholm_relation_holds_on_paths(seed in any::<u64>(), n in 1usize..5) {
        let g = GroupElement::from_value(random_group_matrix(&mut case_rng(seed, "fredholm"), n, 0.7)).unwrap();
        let path = make_path(&g, &TauGrid::default(), PathOptions::default()).unwrap();
        let (l, r) = fredholm_relation_check(&path).unwrap();
        prop_assert!((l - r).norm() < 1e-8 * r.norm(), "{l} {r}");
    }

    #[test]
    fn circle_interpolants_reproduce_their_samples(seed in any::<u64>(), points in 4usize..17, n in 1usize..4) {
        let mut rng = case_rng(seed, "interpolant");
        let axis = Axis::circle(points);
        let samples: Vec<CMatrix> = (0..points).map(|_| random_group_matrix(&mut rng, n, 0.5)).collect();
        let f = CircleInterpolant::new(&axis, samples.clone());
        let domain = ParamDomain::circle(points);
        for (k, s) in samples.iter().enumerate() {
            prop_assert!(linalg::max_abs(&(f.value(&domain.point(k)) - s)) < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn transitions_compose(seed in any::<u64>()) {
        let base = hermitian_series_family(&mut case_rng(seed, "cocycle"), 2, 1, 0.4);
        let fam = OddFamily::hermitian(ParamDomain::circle(6), TauGrid::default(), base).unwrap();
        let q1 = make_invertible_perturbation(&fam, seed).unwrap();
        let q2 = independent_section(&q1, seed ^ 1).unwrap();
        let q3 = independent_section(&q1, seed ^ 2).unwrap();
        let (t12, t23, t13) = (transition(&q1, &q2).unwrap(), transition(&q2, &q3).unwrap(), transition(&q1, &q3).unwrap());
        let composed: Field = product(t12.field().clone(), t23.field().clone());
        let mut worst = 0.0f64;
        for y in fam.domain().points() {
            for &tau in fam.grid().nodes().iter().step_by(7) {
                let x = [y[0], tau];
                worst = worst.max(linalg::max_abs(&(composed.value(&x) - t13.field().value(&x))));
            }
        }
        prop_assert!(worst < 1e-10, "{worst}");
    }
}
