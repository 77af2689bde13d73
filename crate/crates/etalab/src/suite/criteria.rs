use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use super::{Case, RunConfig, SuiteError};
use crate::adiabatic::{
    commutator_trace, curvature_check, curving_check, det_ad, gerbe_bfield_check, lift_loop_family, line_integral,
    adiabatic_determinant, star_multiply, trace_defect, Bracket, DetConfig, EpsilonClass, EpsilonElement, PolygonPath,
    SphereLoop,
};
use crate::bundles::{
    delooping_section, independent_section, index_theorem_check_with, left_action, make_invertible_perturbation_with,
    basicness_residual, transition, IndexConfig, OddFamily, PerturbationConfig,
};
use crate::chern::{
    ch_even, ch_odd, exterior_derivative, inverse, product, tau_only, DecayClass, Field, GroupFamily, ParamDomain,
    SuspendedFamily,
};
use crate::eta::{fredholm_relation_check, tau_invariant, universal_eta, RegularizedTraceConfig};
use crate::fixtures::{
    case_rng, hermitian_series_family, random_epsilon, random_epsilon_family, random_family, random_group_matrix,
    random_hermitian, random_loop, sine_base, standard_loop, su2_torus_family, HalfOpenFamily, SchwartzFamily,
};
use crate::linalg::{self, I};
use crate::opcore::{hermitian_spectrum, GroupElement};
use crate::suspend::{make_path, PathOptions, TauGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Criterion {
    pub number: usize,
    pub suite: &'static str,
    pub title: &'static str,
}

pub const CRITERIA: [Criterion; 10] = [
    Criterion { number: 1, suite: "chern", title: "winding integrality and additivity" },
    Criterion { number: 2, suite: "chern", title: "closedness of the Chern characters" },
    Criterion { number: 3, suite: "eta", title: "universal eta transgression and Schwartz restriction" },
    Criterion { number: 4, suite: "eta", title: "Fredholm determinant relation" },
    Criterion { number: 5, suite: "eta", title: "eta invariant sign oracle and tau independence" },
    Criterion { number: 6, suite: "eta", title: "action shift by winding loops" },
    Criterion { number: 7, suite: "adiabatic", title: "adiabatic trace algebra" },
    Criterion { number: 8, suite: "adiabatic", title: "adiabatic determinant" },
    Criterion { number: 9, suite: "adiabatic", title: "curvature, gerbe and curving" },
    Criterion { number: 10, suite: "bundles", title: "degree-one index theorem over a circle" },
];

type Checked = Result<Vec<Case>, SuiteError>;

/// Runs `f`, turning an error into one failing case.
fn guard(name: &str, tag: &str, f: impl FnOnce() -> Checked) -> Vec<Case> {
    f().unwrap_or_else(|e| vec![Case::error(name, tag, e.to_string())])
}

fn runtime(name: &str, start: Instant, limit: f64) -> Case {
    Case::bound(name, "runtime", start.elapsed().as_secs_f64(), limit).with_note(format!("seconds, limit {limit}"))
}

/// Cases of acceptance criterion `k`.
pub fn criterion(k: usize, cfg: &RunConfig) -> Checked {
    let cases = match k {
        1 => winding(cfg),
        2 => closedness(cfg),
        3 => transgression(cfg),
        4 => fredholm(cfg),
        5 => eta_oracle(cfg),
        6 => action_shift(cfg),
        7 => trace_algebra(cfg),
        8 => determinant(cfg),
        9 => curvature(cfg),
        10 => index(cfg),
        _ => return Err(SuiteError::Config(format!("no criterion {k}"))),
    };
    Ok(cases)
}

fn sizes(cfg: &RunConfig) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..cfg.samples).map(|i| (i, 1 + i % cfg.n))
}

fn winding(cfg: &RunConfig) -> Vec<Case> {
    let start = Instant::now();
    let domain = ParamDomain::circle(cfg.resolution("winding"));
    let tol = cfg.tolerance("winding.integrality", 1e-6);
    let mut cases = Vec::new();
    let mut loops: Vec<Option<(Field, f64)>> = Vec::new();
    for (i, n) in sizes(cfg) {
        let name = format!("winding/loop{i:02}");
        let mut rng = case_rng(cfg.seed, &name);
        let ws: Vec<i32> = (0..n.min(2)).map(|_| rng.random_range(-2..=2)).collect();
        let expected: i32 = ws.iter().sum();
        let f = random_loop(&mut rng, n, &ws, 0.2);
        match winding_number(&GroupFamily::new(domain.clone(), f.clone())) {
            Ok(w) => {
                cases.push(Case::abs(&format!("{name}/integrality"), "winding.integrality", w, w.round(), tol));
                cases.push(Case::abs(&format!("{name}/expected"), "winding.degree", w.round(), expected as f64, 0.0));
                loops.push(Some((f, w)));
            }
            Err(e) => {
                cases.push(Case::error(&name, "winding.integrality", e.to_string()));
                loops.push(None);
            }
        }
    }
    for i in 0..loops.len().saturating_sub(cfg.n) {
        if let (Some((fa, wa)), Some((fb, wb))) = (&loops[i], &loops[i + cfg.n]) {
            let name = format!("winding/pair{i:02}/additivity");
            cases.extend(additivity(&name, &domain, fa, fb, *wa, *wb));
        }
    }
    cases.push(runtime("winding/runtime", start, 10.0));
    cases
}

fn winding_number(family: &GroupFamily) -> Result<f64, SuiteError> {
    Ok(crate::chern::winding_number(family)?)
}

fn additivity(name: &str, domain: &ParamDomain, fa: &Field, fb: &Field, wa: f64, wb: f64) -> Vec<Case> {
    guard(name, "winding.additivity", || {
        let wab = winding_number(&GroupFamily::new(domain.clone(), product(fa.clone(), fb.clone())))?;
        Ok(vec![Case::abs(name, "winding.additivity", wab.round(), wa.round() + wb.round(), 0.0)])
    })
}

/// `max |d omega|` for the degree-one odd character of a random family.
fn odd_closedness(seed: u64, dim: usize, n: usize) -> Result<f64, SuiteError> {
    let f = random_family(&mut case_rng(seed, &format!("closedness/odd{dim}")), 2, dim);
    let fam = GroupFamily::new(ParamDomain::torus(&vec![n; dim])?, f);
    Ok(exterior_derivative(&ch_odd(&fam)?[0])?.max_abs())
}

/// `max |d omega|` for the degree-two even character of a random Schwartz family on three axes.
fn even_closedness(seed: u64, grid: &TauGrid, n: usize) -> Result<f64, SuiteError> {
    let f: Field = Arc::new(SchwartzFamily::random(&mut case_rng(seed, "closedness/even3"), 2, 3, 0.5));
    let fam = SuspendedFamily::new(ParamDomain::torus(&[n, n, n])?, grid.clone(), f, DecayClass::Schwartz);
    Ok(exterior_derivative(&ch_even(&fam)?[1])?.max_abs())
}

fn slope(name: &str, tag: &str, required: f64, at: impl Fn(usize) -> Result<f64, SuiteError>, n: usize) -> Vec<Case> {
    guard(name, tag, || Ok(vec![Case::refinement(name, tag, at(n)?, at(2 * n)?, required)]))
}

fn closedness(cfg: &RunConfig) -> Vec<Case> {
    let start = Instant::now();
    let required = cfg.tolerance("closedness.slope", 3.0);
    let mut cases = slope("closedness/odd2", "closedness.odd", required, |n| odd_closedness(cfg.seed, 2, n), cfg.resolution("closedness"));
    cases.extend(slope("closedness/odd3", "closedness.odd", required, |n| odd_closedness(cfg.seed, 3, n), cfg.resolution("closedness3")));
    cases.extend(guard("closedness/even3", "closedness.even", || {
        let grid = cfg.tau_grid()?;
        let n = cfg.resolution("closedness_even");
        Ok(slope("closedness/even3", "closedness.even", required, |n| even_closedness(cfg.seed, &grid, n), n))
    }));
    cases.push(runtime("closedness/runtime", start, 60.0));
    cases
}

fn transgression_residual(seed: u64, grid: &TauGrid, n: usize) -> Result<f64, SuiteError> {
    let f: Field = Arc::new(HalfOpenFamily::random(&mut case_rng(seed, "transgression"), 2, 1));
    let fam = SuspendedFamily::new(ParamDomain::circle(n), grid.clone(), f, DecayClass::HalfOpen);
    let d_eta = exterior_derivative(universal_eta(&fam)?.zero_form())?;
    Ok(d_eta.sub(&ch_odd(&fam.limit_family())?[0])?.max_abs())
}

fn transgression(cfg: &RunConfig) -> Vec<Case> {
    let required = cfg.tolerance("transgression.slope", 3.0);
    let mut cases = guard("transgression", "eta.transgression", || {
        let grid = cfg.tau_grid()?;
        Ok(slope("transgression/slope", "eta.transgression", required, |n| transgression_residual(cfg.seed, &grid, n), cfg.resolution("transgression")))
    });
    cases.extend(guard("transgression/schwartz", "eta.schwartz_restriction", || {
        let n = cfg.resolution("eta");
        let f: Field = Arc::new(SchwartzFamily::random(&mut case_rng(cfg.seed, "transgression/schwartz"), 2, 2, 0.5));
        let loops = product(tau_only(standard_loop(2, 1), 2), f);
        let fam = SuspendedFamily::new(ParamDomain::torus(&[n, n])?, cfg.tau_grid()?, loops, DecayClass::Schwartz);
        let eta = universal_eta(&fam)?;
        let tol = cfg.tolerance("eta.schwartz_restriction", 1e-7);
        let zero = eta.zero_values().iter().map(|z| (z - 1.0).norm()).fold(0.0, f64::max);
        let two = &eta.forms()[1];
        let curv = (0..fam.domain().len())
            .map(|p| Ok((two.get(p, 0) - curvature_formula(fam.field(), &fam.domain().point(p), fam.grid())?).norm()))
            .collect::<Result<Vec<f64>, SuiteError>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(vec![
            Case::bound("transgression/schwartz/degree0", "eta.schwartz_restriction", zero, tol).with_note("against the loop index 1"),
            Case::bound("transgression/schwartz/degree2", "eta.schwartz_restriction", curv, tol).with_note(format!("against the curvature formula, scale {:.2e}", two.max_abs())),
        ])
    }));
    cases
}

/// `(1 / (2 (2 pi i)^2)) int Tr(s^{-1} s_tau [s^{-1} s_0, s^{-1} s_1]) dtau` at `y`.
fn curvature_formula(field: &Field, y: &[f64], grid: &TauGrid) -> Result<linalg::C64, SuiteError> {
    let c = (2.0 * PI * I).powu(2) * 2.0;
    let integrand = grid
        .nodes()
        .iter()
        .map(|&t| {
            let x = [y[0], y[1], t];
            let inv = linalg::inverse(&field.value(&x)).ok_or_else(|| SuiteError::Fixture("loop is not invertible".into()))?;
            let d = |k: usize| field.partial(&x, k).ok_or_else(|| SuiteError::Fixture("loop lacks analytic partials".into()));
            let (xt, x0, x1) = (&inv * d(2)?, &inv * d(0)?, &inv * d(1)?);
            Ok(linalg::trace(&(xt * (&x0 * &x1 - &x1 * &x0))) / c)
        })
        .collect::<Result<Vec<_>, SuiteError>>()?;
    Ok(grid.quadrature(&integrand)?)
}

fn fredholm(cfg: &RunConfig) -> Vec<Case> {
    let tol = cfg.tolerance("eta.fredholm", 1e-8);
    sizes(cfg)
        .flat_map(|(i, n)| {
            let name = format!("fredholm/path{i:02}");
            guard(&name.clone(), "eta.fredholm", || {
                let mut rng = case_rng(cfg.seed, &name);
                let g = GroupElement::from_value(random_group_matrix(&mut rng, n, 0.7))?;
                let path = make_path(&g, &cfg.tau_grid()?, PathOptions::default())?;
                let (l, r) = fredholm_relation_check(&path)?;
                Ok(vec![Case::bound(&name, "eta.fredholm", (l - r).norm() / r.norm(), tol).with_note("relative")])
            })
        })
        .collect()
}

fn eta_oracle(cfg: &RunConfig) -> Vec<Case> {
    let tol = cfg.tolerance("eta.sign_oracle", 1e-4);
    let trace = RegularizedTraceConfig::default();
    let mut cases: Vec<Case> = sizes(cfg)
        .flat_map(|(i, n)| {
            let name = format!("eta/hermitian{i:02}");
            guard(&name.clone(), "eta.sign_oracle", || {
                let h = random_hermitian(&mut case_rng(cfg.seed, &name), n, 1.0);
                let oracle: f64 = hermitian_spectrum(&h)?.iter().map(|l| 0.5 * l.signum()).sum();
                let fam = crate::eta::EllipticFamily::constant(ParamDomain::circle(4), cfg.tau_grid()?, h);
                let z = crate::eta::family_eta(&fam, &trace)?.zero_values()[0];
                Ok(vec![Case::abs(&name, "eta.sign_oracle", z.re, oracle, tol).with_note(format!("imaginary part {:.2e}", z.im))])
            })
        })
        .collect();
    cases.extend(guard("eta/tau_independence", "eta.tau_independence", || {
        let tol = cfg.tolerance("eta.tau_independence", 1e-8);
        let base = hermitian_series_family(&mut case_rng(cfg.seed, "eta/tau_independence"), 2, 1, 0.4);
        let fam = OddFamily::hermitian(ParamDomain::circle(cfg.resolution("eta")), cfg.tau_grid()?, base)?;
        let q1 = make_invertible_perturbation_with(&fam, cfg.seed, &perturbation(cfg))?;
        let q2 = independent_section(&q1, cfg.seed.wrapping_add(1))?;
        let (t1, t2) = (tau_invariant(&q1.perturbed(), &trace)?, tau_invariant(&q2.perturbed(), &trace)?);
        let worst = t1.iter().zip(&t2).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        Ok(vec![Case::bound("eta/tau_independence", "eta.tau_independence", worst, tol)])
    }));
    cases
}

fn perturbation(cfg: &RunConfig) -> PerturbationConfig {
    PerturbationConfig { margin_floor: cfg.margin_floor, ..PerturbationConfig::default() }
}

fn winding_loops(family: &OddFamily, w: i32) -> SuspendedFamily {
    let dim = family.domain().dim();
    SuspendedFamily::new(family.domain().clone(), family.grid().clone(), tau_only(standard_loop(family.size(), w), dim), DecayClass::Schwartz)
}

fn action_shift(cfg: &RunConfig) -> Vec<Case> {
    guard("action", "eta.action_shift", || {
        let tol = cfg.tolerance("eta.action_shift", 1e-6);
        let trace = RegularizedTraceConfig::default();
        let base = hermitian_series_family(&mut case_rng(cfg.seed, "action"), 2, 1, 0.4);
        let fam = OddFamily::hermitian(ParamDomain::circle(cfg.resolution("eta")), cfg.tau_grid()?, base)?;
        let q = make_invertible_perturbation_with(&fam, cfg.seed, &perturbation(cfg))?;
        let eta = q.eta(&trace)?.zero_values();
        let mut cases = Vec::new();
        for w in -2..=2 {
            let shifted = left_action(&winding_loops(&fam, w), &q)?.eta(&trace)?.zero_values();
            let shifts: Vec<f64> = eta.iter().zip(&shifted).map(|(a, b)| (b - a).re).collect();
            let err = eta.iter().zip(&shifted).map(|(a, b)| (b - a - w as f64).norm()).fold(0.0, f64::max);
            let rounded = shifts.iter().map(|s| s.round()).fold(f64::NAN, |acc, s| if acc.is_nan() || acc == s { s } else { f64::MAX });
            cases.push(Case::abs(&format!("action/w{w:+}/rounded"), "eta.action_shift", rounded, w as f64, 0.0));
            cases.push(Case::bound(&format!("action/w{w:+}/deviation"), "eta.action_shift", err, tol));
        }
        Ok(cases)
    })
}

fn trace_algebra(cfg: &RunConfig) -> Vec<Case> {
    guard("trace", "adiabatic.commutator", || {
        let g = cfg.bi_grid()?;
        let ds = |name: &str| random_epsilon(&mut case_rng(cfg.seed, name), &g, 2, EpsilonClass::DoublySchwartz, 0.5);
        let tol = cfg.tolerance("adiabatic.commutator", 1e-9);
        let mut cases = Vec::new();
        let pairs = (cfg.samples / 4).max(1);
        for i in 0..pairs {
            let (a, b) = (ds(&format!("trace/comm{i:02}/a")), ds(&format!("trace/comm{i:02}/b")));
            let t = commutator_trace(&a, &b, cfg.bracket)?;
            cases.push(Case::bound(&format!("trace/commutator{i:02}"), "adiabatic.commutator", t.norm(), tol).with_note(format!("bracket {}", cfg.bracket)));
        }
        let (a, b) = (ds("trace/comm00/a"), ds("trace/comm00/b"));
        let verbatim = commutator_trace(&a, &b, Bracket::Verbatim)?.norm();
        cases.push(Case::at_least("trace/verbatim_detects", "adiabatic.bracket_sanity", verbatim, 1e-6));
        let tol = cfg.tolerance("adiabatic.trace_defect", 1e-7);
        let classes = [
            (EpsilonClass::HalfOpen, EpsilonClass::HalfOpen),
            (EpsilonClass::HalfOpen, EpsilonClass::DoublySchwartz),
            (EpsilonClass::DClass(1), EpsilonClass::DClass(-1)),
        ];
        for i in 0..cfg.samples {
            let name = format!("trace/defect{i:02}");
            let (ca, cb) = classes[i % classes.len()];
            let mut rng = case_rng(cfg.seed, &name);
            let x = random_epsilon(&mut rng, &g, 2, ca, 0.6);
            let y = random_epsilon(&mut rng, &g, 2, cb, 0.6);
            let (l, r) = trace_defect(&x, &y)?;
            cases.push(Case::bound(&name, "adiabatic.trace_defect", (l - r).norm(), tol).with_note(format!("{ca:?} x {cb:?}")));
        }
        Ok(cases)
    })
}

fn determinant(cfg: &RunConfig) -> Vec<Case> {
    guard("determinant", "adiabatic.det", || {
        let g = cfg.bi_grid()?;
        let det = DetConfig::default();
        let tol = cfg.tolerance("adiabatic.det", 1e-7);
        let ds = |name: &str| random_epsilon(&mut case_rng(cfg.seed, name), &g, 2, EpsilonClass::DoublySchwartz, 0.5);
        let (a, b) = (ds("det/a"), ds("det/b"));
        let (d1, d2) = (det_ad(&a, &det)?, det_ad(&b, &det)?);
        let d12 = det_ad(&star_multiply(&a, &b)?, &det)?;
        let id = EpsilonElement::identity(g.clone(), 2);
        let detour = PolygonPath::new(vec![id, ds("det/via"), a])?;
        let dd = adiabatic_determinant(&detour, &det)?;
        let mut cases = vec![
            Case::bound("det/multiplicative", "adiabatic.det_multiplicative", (d12 - d1 * d2).norm(), tol),
            Case::bound("det/path_independent", "adiabatic.det_path", (dd - d1).norm(), tol),
        ];
        let loop_cfg = DetConfig { tol: 1e-7, ..DetConfig::default() };
        let ltol = cfg.tolerance("adiabatic.loop_integral", 1e-6);
        for orientation in [1.0, -1.0] {
            let v = line_integral(&SphereLoop::new(g.clone(), 1.0, orientation), &loop_cfg)?;
            let k = (v / (2.0 * PI * I)).re.round();
            let err = (v - 2.0 * PI * I * k).norm();
            cases.push(Case::bound(&format!("det/loop{orientation:+}"), "adiabatic.loop_integral", err, ltol).with_note(format!("2 pi i x {k}")));
        }
        Ok(cases)
    })
}

fn curvature_residual(cfg: &RunConfig, n: usize) -> Result<f64, SuiteError> {
    let fam = random_epsilon_family(&mut case_rng(cfg.seed, "curvature"), ParamDomain::torus(&[n, n])?, cfg.bi_grid()?, 2, 1, 0.8);
    let (l, r) = curvature_check(&fam)?;
    Ok(l.sub(&r)?.max_abs())
}

fn gerbe_residual(cfg: &RunConfig, n: usize) -> Result<f64, SuiteError> {
    let g = cfg.bi_grid()?;
    let dom = ParamDomain::torus(&[n, n])?;
    let mut rng = case_rng(cfg.seed, "gerbe");
    let a = HalfOpenFamily::random(&mut rng, 2, 2);
    let mut other = HalfOpenFamily::random(&mut rng, 2, 2);
    let s = linalg::C64::new(2.5, 0.0);
    other.bump.constant *= s;
    for (_, p, q) in other.bump.terms.iter_mut() {
        *p *= s;
        *q *= s;
    }
    let b = HalfOpenFamily { target: a.target.clone(), bump: other.bump };
    let (fa, fb): (Field, Field) = (Arc::new(a), Arc::new(b));
    let half_open = |f: &Field| SuspendedFamily::new(dom.clone(), g.tau().clone(), f.clone(), DecayClass::HalfOpen);
    let (sa, sb) = (half_open(&fa), half_open(&fb));
    let lift = lift_loop_family(dom.clone(), g.clone(), product(fa, inverse(fb)), 0)?;
    Ok(gerbe_bfield_check(&sa, &sb, &lift)?.residual()?)
}

fn curving_residual(cfg: &RunConfig, n: usize) -> Result<f64, SuiteError> {
    let g = cfg.bi_grid()?;
    let mut h = HalfOpenFamily::random(&mut case_rng(cfg.seed, "curving"), 2, 3);
    h.target = su2_torus_family(0.9);
    let fam = SuspendedFamily::new(ParamDomain::torus(&[n, n, n])?, g.tau().clone(), Arc::new(h), DecayClass::HalfOpen);
    let (l, r) = curving_check(&fam)?;
    Ok(l.sub(&r)?.max_abs())
}

fn curvature(cfg: &RunConfig) -> Vec<Case> {
    let start = Instant::now();
    let required = cfg.tolerance("adiabatic.slope", 3.0);
    let mut cases = slope("curvature/slope", "adiabatic.curvature", required, |n| curvature_residual(cfg, n), cfg.resolution("curvature"));
    cases.extend(slope("gerbe/slope", "adiabatic.gerbe", required, |n| gerbe_residual(cfg, n), cfg.resolution("gerbe")));
    cases.extend(slope("curving/slope", "adiabatic.curving", required, |n| curving_residual(cfg, n), cfg.resolution("curving")));
    cases.push(runtime("curvature/runtime", start, 300.0));
    cases
}

fn index_config(cfg: &RunConfig) -> IndexConfig {
    IndexConfig { seed: cfg.seed, trace: RegularizedTraceConfig::default(), perturbation: perturbation(cfg) }
}

fn index(cfg: &RunConfig) -> Vec<Case> {
    let tol = cfg.tolerance("index.integrality", 1e-5);
    let mut cases = Vec::new();
    for w in [0, 1, -1, 2] {
        let name = format!("index/w{w:+}");
        cases.extend(guard(&name.clone(), "index.integrality", || {
            let plain = OddFamily::hermitian(ParamDomain::circle(cfg.resolution("index")), cfg.tau_grid()?, sine_base())?;
            let fam = plain.twisted(tau_only(standard_loop(1, w), 1))?;
            let chk = index_theorem_check_with(&fam, &index_config(cfg))?;
            Ok(vec![
                Case::bound(&format!("{name}/integrality"), "index.integrality", chk.integrality(), tol),
                Case::abs(&format!("{name}/sides"), "index.sides", chk.lhs.re, chk.rhs.re, tol),
                Case::abs(&format!("{name}/tau"), "index.tau", chk.tau_winding, chk.lhs.re, tol),
                Case::abs(&format!("{name}/expected"), "index.expected", chk.lhs.re.abs(), w.abs() as f64, tol)
                    .with_note("finite-rank circle families have index 0 for every twist"),
            ])
        }));
    }
    cases.extend(guard("index/basicness", "index.basicness", || {
        let fam = OddFamily::hermitian(ParamDomain::circle(cfg.resolution("index")), cfg.tau_grid()?, sine_base())?;
        let q1 = make_invertible_perturbation_with(&fam, cfg.seed, &perturbation(cfg))?;
        let q2 = independent_section(&q1, cfg.seed.wrapping_add(3))?;
        let r = basicness_residual(&q1, &q2, &RegularizedTraceConfig::default())?;
        Ok(vec![Case::bound("index/basicness", "index.basicness", r, cfg.tolerance("index.basicness", 1e-6))])
    }));
    cases
}

/// Cocycle of transition functions and integrality of the delooping winding.
pub fn bundle_structure(cfg: &RunConfig) -> Vec<Case> {
    guard("bundles", "bundles.structure", || {
        let n = cfg.resolution("bundles");
        let fam = OddFamily::hermitian(ParamDomain::circle(n), cfg.tau_grid()?, sine_base())?;
        let pcfg = perturbation(cfg);
        let q1 = make_invertible_perturbation_with(&fam, cfg.seed, &pcfg)?;
        let q2 = independent_section(&q1, cfg.seed.wrapping_add(11))?;
        let q3 = make_invertible_perturbation_with(&fam, cfg.seed.wrapping_add(5), &pcfg)?;
        let (t12, t23, t13) = (transition(&q1, &q2)?, transition(&q2, &q3)?, transition(&q1, &q3)?);
        let composed = product(t12.field().clone(), t23.field().clone());
        let mut worst = 0.0f64;
        for y in fam.domain().points() {
            for &tau in fam.grid().nodes() {
                let x = [y[0], tau];
                worst = worst.max(linalg::max_abs(&(composed.value(&x) - t13.field().value(&x))));
            }
        }
        let base = hermitian_series_family(&mut case_rng(cfg.seed, "bundles/delooping"), 2, 1, 0.4);
        let other = OddFamily::hermitian(ParamDomain::circle(n), cfg.tau_grid()?, base)?;
        let q = make_invertible_perturbation_with(&other, cfg.seed, &pcfg)?;
        let w = delooping_section(&other, &q)?.winding()?;
        Ok(vec![
            Case::bound("bundles/cocycle", "bundles.cocycle", worst, cfg.tolerance("bundles.cocycle", 1e-10)),
            Case::abs("bundles/delooping", "bundles.delooping", w, w.round(), cfg.tolerance("bundles.delooping", 1e-6)),
        ])
    })
}
