//! Reproducible test families: the standard winding loop, random loops with
//! known winding, and random smooth families with analytic derivatives.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::adiabatic::{lift_loop_family, BiGrid, EpsilonClass, EpsilonElement, EpsilonFamily, IndexShiftElement};
use crate::chern::{product, tau_only, Field, FnFamily, MatrixFamily, ParamDomain};
use crate::linalg::{self, CMatrix, C64, I};
use crate::suspend::{ramp, ramp_derivative};

/// Deterministic per-case generator derived from a run seed and a case name.
pub fn case_rng(seed: u64, name: &str) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h.rotate_left(17))
}

pub fn complex_normal<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Complex Gaussian matrix with entries of variance `scale^2 / n`.
pub fn random_matrix<R: Rng>(rng: &mut R, n: usize, scale: f64) -> CMatrix {
    let s = scale / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |_, _| complex_normal(rng) * s)
}

pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize, scale: f64) -> CMatrix {
    let m = random_matrix(rng, n, scale);
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// `diag(1, 0, ..., 0)`.
pub fn first_projector(n: usize) -> CMatrix {
    let mut p = CMatrix::zeros(n, n);
    p[(0, 0)] = C64::new(1.0, 0.0);
    p
}

/// Angle profile `theta(tau) = pi (1 + tanh tau)` of the standard loop.
pub fn loop_angle(tau: f64) -> f64 {
    2.0 * PI * ramp(tau)
}

pub fn loop_angle_derivative(tau: f64) -> f64 {
    2.0 * PI * ramp_derivative(tau)
}

/// `Id + (e^{i phi} - 1) P` and its derivative in `phi`.
pub fn phase_element(n: usize, phi: f64) -> (CMatrix, CMatrix) {
    let p = first_projector(n);
    let e = C64::from_polar(1.0, phi);
    (linalg::identity(n) + &p * (e - 1.0), &p * (I * e))
}

/// The standard loop `s^w(tau) = Id + (e^{i w theta(tau)} - 1) P`, winding `w`.
pub fn standard_loop(n: usize, w: i32) -> Field {
    FnFamily::new(n, move |x| phase_element(n, w as f64 * loop_angle(x[0])).0)
        .with_partials(move |x, _| phase_element(n, w as f64 * loop_angle(x[0])).1 * C64::new(w as f64 * loop_angle_derivative(x[0]), 0.0))
        .into_field()
}

/// `Id + (e^{i w theta} - 1) P` over a circle coordinate `theta`.
pub fn phase_loop(n: usize, w: i32) -> Field {
    FnFamily::new(n, move |x| phase_element(n, w as f64 * x[0]).0)
        .with_partials(move |x, _| phase_element(n, w as f64 * x[0]).1 * C64::new(w as f64, 0.0))
        .into_field()
}

/// `C + sum_m (A_m cos(k_m . x) + B_m sin(k_m . x))` with integer wave vectors.
#[derive(Debug, Clone)]
pub struct TrigSeries {
    pub constant: CMatrix,
    pub terms: Vec<(Vec<f64>, CMatrix, CMatrix)>,
}

impl TrigSeries {
    pub fn random<R: Rng>(rng: &mut R, n: usize, dim: usize, modes: usize, amplitude: f64) -> Self {
        let terms = (0..modes)
            .map(|_| {
                let mut k: Vec<f64> = (0..dim).map(|_| rng.random_range(-1i32..=1) as f64).collect();
                if k.iter().all(|&v| v == 0.0) {
                    k[rng.random_range(0..dim)] = 1.0;
                }
                (k, random_matrix(rng, n, amplitude), random_matrix(rng, n, amplitude))
            })
            .collect();
        Self { constant: CMatrix::zeros(n, n), terms }
    }

    pub fn eval(&self, x: &[f64]) -> CMatrix {
        self.terms.iter().fold(self.constant.clone(), |acc, (k, a, b)| {
            let phase: f64 = k.iter().zip(x).map(|(a, b)| a * b).sum();
            acc + a * C64::new(phase.cos(), 0.0) + b * C64::new(phase.sin(), 0.0)
        })
    }

    pub fn partial(&self, x: &[f64], axis: usize) -> CMatrix {
        let n = self.constant.nrows();
        self.terms.iter().fold(CMatrix::zeros(n, n), |acc, (k, a, b)| {
            let phase: f64 = k.iter().zip(x).map(|(a, b)| a * b).sum();
            acc + (b * C64::new(phase.cos(), 0.0) - a * C64::new(phase.sin(), 0.0)) * C64::new(k[axis], 0.0)
        })
    }

    pub fn max_norm_bound(&self) -> f64 {
        let fro = |m: &CMatrix| m.norm();
        fro(&self.constant) + self.terms.iter().map(|(_, a, b)| fro(a) + fro(b)).sum::<f64>()
    }
}

/// `g0 (Id + S(x))` with `S` a small trigonometric series on a torus.
pub struct RandomFamily {
    pub base: CMatrix,
    pub series: TrigSeries,
}

impl MatrixFamily for RandomFamily {
    fn size(&self) -> usize {
        self.base.nrows()
    }
    fn value(&self, x: &[f64]) -> CMatrix {
        &self.base * (linalg::identity(self.size()) + self.series.eval(x))
    }
    fn partial(&self, x: &[f64], axis: usize) -> Option<CMatrix> {
        Some(&self.base * self.series.partial(x, axis))
    }
    fn has_partials(&self) -> bool {
        true
    }
}

/// Random invertible element `Id + A` with `||A||_F <= bound`.
pub fn random_group_matrix<R: Rng>(rng: &mut R, n: usize, bound: f64) -> CMatrix {
    let a = random_matrix(rng, n, 1.0);
    let norm = a.norm().max(1e-12);
    linalg::identity(n) + a * C64::new(bound * rng.random_range(0.3..1.0) / norm, 0.0)
}

/// Random family on a `dim`-torus, invertible by construction (`||S|| < 0.6`).
pub fn random_family<R: Rng>(rng: &mut R, n: usize, dim: usize) -> Field {
    let mut series = TrigSeries::random(rng, n, dim, 3, 1.0);
    let bound = series.max_norm_bound();
    let s = 0.6 / bound.max(1e-12);
    for (_, a, b) in series.terms.iter_mut() {
        *a *= C64::new(s, 0.0);
        *b *= C64::new(s, 0.0);
    }
    Arc::new(RandomFamily { base: random_group_matrix(rng, n, 0.5), series })
}

/// Loop `g0 diag(e^{i n_j theta}) (Id + eps S(theta))` with winding `sum n_j`.
pub fn random_loop<R: Rng>(rng: &mut R, n: usize, windings: &[i32], eps: f64) -> Field {
    assert!(windings.len() <= n);
    let mut ws = windings.to_vec();
    ws.resize(n, 0);
    let base = random_group_matrix(rng, n, 0.5);
    let mut series = TrigSeries::random(rng, n, 1, 2, 1.0);
    let bound = series.max_norm_bound();
    for (_, a, b) in series.terms.iter_mut() {
        *a *= C64::new(eps / bound, 0.0);
        *b *= C64::new(eps / bound, 0.0);
    }
    let (ws2, base2, series2) = (ws.clone(), base.clone(), series.clone());
    let diag = move |theta: f64, ws: &[i32]| {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, ws.iter().map(|&k| C64::from_polar(1.0, k as f64 * theta))));
        let dd = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            ws.iter().map(|&k| C64::new(0.0, k as f64) * C64::from_polar(1.0, k as f64 * theta)),
        ));
        (d, dd)
    };
    FnFamily::new(n, move |x| {
        let (d, _) = diag(x[0], &ws);
        &base * d * (linalg::identity(n) + series.eval(x))
    })
    .with_partials(move |x, _| {
        let (d, dd) = diag(x[0], &ws2);
        &base2 * (dd * (linalg::identity(n) + series2.eval(x)) + d * series2.partial(x, 0))
    })
    .into_field()
}

/// `Id + sum_m e^{-(tau - c_m)^2} T_m(y)` over `Y x R_tau`; Schwartz loops.
pub struct SchwartzFamily {
    pub n: usize,
    pub bumps: Vec<(f64, TrigSeries)>,
}

impl SchwartzFamily {
    pub fn random<R: Rng>(rng: &mut R, n: usize, dim: usize, amplitude: f64) -> Self {
        let bumps: Vec<(f64, TrigSeries)> = (0..2)
            .map(|_| {
                let mut s = TrigSeries::random(rng, n, dim, 2, 1.0);
                s.constant = random_matrix(rng, n, 1.0);
                (rng.random_range(-1.0..1.0), s)
            })
            .collect();
        let bound: f64 = bumps.iter().map(|(_, s)| s.max_norm_bound()).sum();
        let scale = amplitude / bound.max(1e-12);
        let bumps = bumps
            .into_iter()
            .map(|(c, mut s)| {
                s.constant *= C64::new(scale, 0.0);
                for (_, a, b) in s.terms.iter_mut() {
                    *a *= C64::new(scale, 0.0);
                    *b *= C64::new(scale, 0.0);
                }
                (c, s)
            })
            .collect();
        Self { n, bumps }
    }
}

impl MatrixFamily for SchwartzFamily {
    fn size(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> CMatrix {
        let (y, tau) = x.split_at(x.len() - 1);
        self.bumps.iter().fold(linalg::identity(self.n), |acc, (c, s)| {
            acc + s.eval(y) * C64::new((-(tau[0] - c).powi(2)).exp(), 0.0)
        })
    }
    fn partial(&self, x: &[f64], axis: usize) -> Option<CMatrix> {
        let (y, tau) = x.split_at(x.len() - 1);
        let t = tau[0];
        Some(self.bumps.iter().fold(CMatrix::zeros(self.n, self.n), |acc, (c, s)| {
            let g = (-(t - c).powi(2)).exp();
            if axis == y.len() {
                acc + s.eval(y) * C64::new(-2.0 * (t - c) * g, 0.0)
            } else {
                acc + s.partial(y, axis) * C64::new(g, 0.0)
            }
        }))
    }
    fn has_partials(&self) -> bool {
        true
    }
}

/// `(Id + r(tau) (g(y) - Id)) (Id + e^{-tau^2} S(y))`: a half-open family
/// ending at `g(y)`.
pub struct HalfOpenFamily {
    pub target: Field,
    pub bump: TrigSeries,
}

impl HalfOpenFamily {
    pub fn random<R: Rng>(rng: &mut R, n: usize, dim: usize) -> Self {
        let mut series = TrigSeries::random(rng, n, dim, 3, 1.0);
        let bound = series.max_norm_bound();
        for (_, a, b) in series.terms.iter_mut() {
            *a *= C64::new(0.3 / bound, 0.0);
            *b *= C64::new(0.3 / bound, 0.0);
        }
        let target: Field = Arc::new(RandomFamily { base: linalg::identity(n), series });
        let mut bump = TrigSeries::random(rng, n, dim, 2, 1.0);
        bump.constant = random_matrix(rng, n, 1.0);
        let b = bump.max_norm_bound();
        bump.constant *= C64::new(0.3 / b, 0.0);
        for (_, a, bb) in bump.terms.iter_mut() {
            *a *= C64::new(0.3 / b, 0.0);
            *bb *= C64::new(0.3 / b, 0.0);
        }
        Self { target, bump }
    }
}

impl MatrixFamily for HalfOpenFamily {
    fn size(&self) -> usize {
        self.target.size()
    }
    fn value(&self, x: &[f64]) -> CMatrix {
        let n = self.size();
        let (y, tau) = x.split_at(x.len() - 1);
        let id = linalg::identity(n);
        let path = &id + (self.target.value(y) - &id) * C64::new(ramp(tau[0]), 0.0);
        path * (&id + self.bump.eval(y) * C64::new((-tau[0] * tau[0]).exp(), 0.0))
    }
    fn partial(&self, x: &[f64], axis: usize) -> Option<CMatrix> {
        let n = self.size();
        let (y, tau) = x.split_at(x.len() - 1);
        let t = tau[0];
        let id = linalg::identity(n);
        let g = self.target.value(y);
        let e = (-t * t).exp();
        let path = &id + (&g - &id) * C64::new(ramp(t), 0.0);
        let bump = &id + self.bump.eval(y) * C64::new(e, 0.0);
        let (dpath, dbump) = if axis == y.len() {
            ((&g - &id) * C64::new(ramp_derivative(t), 0.0), self.bump.eval(y) * C64::new(-2.0 * t * e, 0.0))
        } else {
            (self.target.partial(y, axis)? * C64::new(ramp(t), 0.0), self.bump.partial(y, axis) * C64::new(e, 0.0))
        };
        Some(dpath * bump + path * dbump)
    }
    fn has_partials(&self) -> bool {
        true
    }
}

fn normalized<R: Rng>(rng: &mut R, n: usize, size: f64) -> CMatrix {
    let m = random_matrix(rng, n, 1.0);
    let norm = m.norm().max(1e-12);
    m * C64::new(size / norm, 0.0)
}

fn gaussian2(t: f64, tau: f64, c: (f64, f64)) -> C64 {
    C64::new((-(t - c.0).powi(2) - (tau - c.1).powi(2)).exp(), 0.0)
}

/// Random star-group element of the given class, `a0` within `amplitude`
/// of a product of simple factors.
pub fn random_epsilon<R: Rng>(rng: &mut R, grid: &BiGrid, n: usize, class: EpsilonClass, amplitude: f64) -> EpsilonElement {
    let mut centre = || (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let (c1, c2, c3) = (centre(), centre(), centre());
    let e = rng.random_range(-1.0..1.0);
    let (r1, r2) = (normalized(rng, n, 0.5 * amplitude), normalized(rng, n, 0.5 * amplitude));
    let s = normalized(rng, n, amplitude);
    let q = normalized(rng, n, amplitude);
    let id = linalg::identity(n);
    let bump = move |t: f64, tau: f64| &id + &r1 * gaussian2(t, tau, c1) + &r2 * gaussian2(t, tau, c2);
    let a1 = move |t: f64, tau: f64| &s * gaussian2(t, tau, c3);
    let j = class.index();
    let shift = move |tau: f64| IndexShiftElement::power_at(n, j, tau);
    let id = linalg::identity(n);
    let loop_part = move |tau: f64| &id + &q * C64::new((-(tau - e).powi(2)).exp(), 0.0);
    let path = {
        let lp = loop_part.clone();
        let id = linalg::identity(n);
        move |t: f64, tau: f64| &id + (lp(tau) - &id) * C64::new(ramp(t), 0.0)
    };
    let out = match class {
        EpsilonClass::DoublySchwartz => EpsilonElement::doubly_schwartz(grid.clone(), n, bump, a1),
        EpsilonClass::HalfOpen => EpsilonElement::half_open(grid.clone(), n, |t, tau| path(t, tau) * bump(t, tau), a1, loop_part),
        EpsilonClass::DClass(j) => EpsilonElement::d_class(
            grid.clone(),
            n,
            j,
            |t, tau| shift(tau) * path(t, tau) * bump(t, tau),
            a1,
            |tau| shift(tau) * loop_part(tau),
        ),
    };
    out.expect("random elements satisfy their class conditions")
}

/// Random tangent vector at a point of class `class`; its `t = +inf` slice
/// is nonzero for the extended classes.
pub fn random_epsilon_tangent<R: Rng>(rng: &mut R, grid: &BiGrid, n: usize, class: EpsilonClass, amplitude: f64) -> EpsilonElement {
    let (c1, c2) = ((rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)), (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let e = rng.random_range(-1.0..1.0);
    let (q1, q2, s) = (normalized(rng, n, amplitude), normalized(rng, n, amplitude), normalized(rng, n, amplitude));
    let q1 = if class.is_extended() { q1 } else { CMatrix::zeros(n, n) };
    let edge = |tau: f64| C64::new((-(tau - e).powi(2)).exp(), 0.0);
    EpsilonElement::tangent(
        grid.clone(),
        class,
        grid.sample(|t, tau| &q1 * (edge(tau) * ramp(t)) + &q2 * gaussian2(t, tau, c1)),
        grid.sample(|t, tau| &s * gaussian2(t, tau, c2)),
        vec![CMatrix::zeros(n, n); grid.n_tau()],
        grid.tau().nodes().iter().map(|&tau| &q1 * edge(tau)).collect(),
    )
    .expect("random tangents decay")
}

/// Random extended family over `domain` whose `t = +inf` slices are
/// `s^j` times a random Schwartz loop family.
pub fn random_epsilon_family<R: Rng>(
    rng: &mut R,
    domain: ParamDomain,
    grid: BiGrid,
    n: usize,
    j: i32,
    amplitude: f64,
) -> EpsilonFamily {
    let d = domain.dim();
    let loops = product(tau_only(standard_loop(n, j), d), Arc::new(SchwartzFamily::random(rng, n, d, amplitude)));
    lift_loop_family(domain, grid, loops, j).expect("sizes agree")
}

/// `exp(i c sin(y0) s1) exp(i c sin(y1) s2) exp(i c sin(y2) s3)` on the 3-torus.
pub fn su2_torus_family(c: f64) -> Field {
    let pauli = [
        CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]),
        CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)]),
        CMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]),
    ];
    let factor = |k: usize| -> Field {
        let (p, q) = (pauli[k].clone(), pauli[k].clone());
        let rot = move |phi: f64, s: &CMatrix| linalg::identity(2) * C64::new(phi.cos(), 0.0) + s * C64::new(0.0, phi.sin());
        FnFamily::new(2, move |x| rot(c * x[k].sin(), &p))
            .with_partials(move |x, axis| {
                if axis != k {
                    return CMatrix::zeros(2, 2);
                }
                rot(c * x[k].sin(), &q) * &q * C64::new(0.0, c * x[k].cos())
            })
            .into_field()
    };
    product(product(factor(0), factor(1)), factor(2))
}

/// Hermitian `D + sum (A_m cos(k_m . y) + B_m sin(k_m . y))` with alternating diagonal `D`.
pub fn hermitian_series_family<R: Rng>(rng: &mut R, n: usize, dim: usize, amplitude: f64) -> Field {
    let mut series = TrigSeries::random(rng, n, dim, 2, amplitude);
    series.constant = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        (0..n).map(|k| C64::new(if k % 2 == 0 { 0.3 } else { -0.4 }, 0.0)),
    ));
    let herm = |m: &CMatrix| (m + m.adjoint()) * C64::new(0.5, 0.0);
    for (_, a, b) in series.terms.iter_mut() {
        *a = herm(a);
        *b = herm(b);
    }
    let s2 = series.clone();
    FnFamily::new(n, move |y: &[f64]| series.eval(y)).with_partials(move |y: &[f64], k| s2.partial(y, k)).into_field()
}

/// `A(theta) = sin(theta)` in rank one.
pub fn sine_base() -> Field {
    let one = |x: f64| CMatrix::from_element(1, 1, C64::new(x, 0.0));
    FnFamily::new(1, move |y: &[f64]| one(y[0].sin())).with_partials(move |y: &[f64], _| one(y[0].cos())).into_field()
}
