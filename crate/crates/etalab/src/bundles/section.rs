use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use super::family::OddFamily;
use super::BundleError;
use crate::chern::{inverse, product, DecayClass, Field, MatrixFamily, SuspendedFamily};
use crate::eta::{family_eta, EllipticFamily, EtaValue, RegularizedTraceConfig};
use crate::fixtures::{case_rng, SchwartzFamily};
use crate::linalg::{self, CMatrix, C64};
use crate::opcore::MARGIN_FLOOR;
use crate::suspend::{SuspendedElement, SuspendError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationConfig {
    /// Required margin of `a + q` after the construction.
    pub margin_floor: f64,
    /// First strength tried.
    pub start: f64,
    pub growth: f64,
    pub max_steps: usize,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self { margin_floor: 1e-3, start: 0.1, growth: 2.0, max_steps: 12 }
    }
}

/// Extra `tau` samples on top of the grid nodes, where bumps live.
const DENSE_TAU: usize = 97;
const DENSE_EXTENT: f64 = 4.0;

/// A perturbation `q(y, tau)`, Schwartz in `tau`, making `a + q` invertible.
#[derive(Clone)]
pub struct PerturbationSection {
    family: OddFamily,
    q: Option<Field>,
    margins: Vec<f64>,
    strength: f64,
}

impl std::fmt::Debug for PerturbationSection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PerturbationSection")
            .field("family", &self.family)
            .field("strength", &self.strength)
            .field("min_margin", &self.min_margin())
            .finish()
    }
}

impl PerturbationSection {
    fn new(family: OddFamily, q: Option<Field>, strength: f64) -> Self {
        let margins = margins(&perturbed(&family, q.as_ref()));
        Self { family, q, margins, strength }
    }

    pub fn family(&self) -> &OddFamily {
        &self.family
    }

    /// `q`, or `None` when the family is invertible as it stands.
    pub fn q(&self) -> Option<&Field> {
        self.q.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.q.is_none()
    }

    /// Smallest singular value of `a + q` over the `tau` samples, per grid point.
    pub fn margins(&self) -> &[f64] {
        &self.margins
    }

    pub fn min_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Strength `c` of the spectral bump, `0` when none was needed.
    pub fn strength(&self) -> f64 {
        self.strength
    }

    /// `a + q` as an elliptic family.
    pub fn perturbed(&self) -> EllipticFamily {
        perturbed(&self.family, self.q.as_ref())
    }

    /// `q` over grid point `idx`, sampled on the `tau` grid.
    pub fn q_at(&self, idx: usize) -> Result<SuspendedElement, BundleError> {
        let n = self.family.size();
        let mut x = self.family.domain().point(idx);
        x.push(0.0);
        let samples = self
            .family
            .grid()
            .nodes()
            .iter()
            .map(|&t| {
                *x.last_mut().expect("tau slot") = t;
                self.q.as_ref().map_or_else(|| CMatrix::zeros(n, n), |q| q.value(&x))
            })
            .collect();
        Ok(SuspendedElement::new(self.family.grid().clone(), samples)?)
    }

    pub fn eta(&self, cfg: &RegularizedTraceConfig) -> Result<EtaValue, BundleError> {
        Ok(family_eta(&self.perturbed(), cfg)?)
    }
}

fn perturbed(family: &OddFamily, q: Option<&Field>) -> EllipticFamily {
    match q {
        Some(q) => family.elliptic().with_perturbation(q.clone()),
        None => family.elliptic().clone(),
    }
}

fn margins(e: &EllipticFamily) -> Vec<f64> {
    let mut taus = e.grid().nodes().to_vec();
    taus.extend((0..DENSE_TAU).map(|k| DENSE_EXTENT * (2.0 * k as f64 / (DENSE_TAU - 1) as f64 - 1.0)));
    (0..e.domain().len())
        .into_par_iter()
        .map(|p| {
            let y = e.domain().point(p);
            taus.iter().map(|&t| linalg::min_singular_value(&e.value(&y, t))).fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// `c log(1 + e^{-x / c})`; `x + softplus(x)` is positive for every real `x`.
fn softplus(x: f64, c: f64) -> f64 {
    let u = -x / c;
    c * (u.max(0.0) + (-u.abs()).exp().ln_1p())
}

fn softplus_derivative(x: f64, c: f64) -> f64 {
    -1.0 / (1.0 + (x / c).exp())
}

/// `s(y, tau) e^{-(tau / w)^2} f_c(A(y))`.
struct SpectralBump {
    base: Field,
    twist: Option<Field>,
    strength: f64,
    width: f64,
}

impl SpectralBump {
    fn untwisted(&self, x: &[f64]) -> CMatrix {
        let (y, tau) = x.split_at(x.len() - 1);
        let c = self.strength;
        let g = (-(tau[0] / self.width).powi(2)).exp();
        linalg::hermitian_function(&self.base.value(y), |l| softplus(l, c)) * C64::new(g, 0.0)
    }

    fn untwisted_partial(&self, x: &[f64], axis: usize) -> Option<CMatrix> {
        let (y, tau) = x.split_at(x.len() - 1);
        let c = self.strength;
        let t = tau[0];
        let g = (-(t / self.width).powi(2)).exp();
        let a = self.base.value(y);
        if axis == y.len() {
            let f = linalg::hermitian_function(&a, |l| softplus(l, c));
            return Some(f * C64::new(-2.0 * t / (self.width * self.width) * g, 0.0));
        }
        let da = self.base.partial(y, axis)?;
        let df = linalg::hermitian_function_derivative(&a, &da, |l| softplus(l, c), |l| softplus_derivative(l, c));
        Some(df * C64::new(g, 0.0))
    }
}

impl MatrixFamily for SpectralBump {
    fn size(&self) -> usize {
        self.base.size()
    }
    fn value(&self, x: &[f64]) -> CMatrix {
        match &self.twist {
            Some(s) => s.value(x) * self.untwisted(x),
            None => self.untwisted(x),
        }
    }
    fn partial(&self, x: &[f64], axis: usize) -> Option<CMatrix> {
        let d = self.untwisted_partial(x, axis)?;
        match &self.twist {
            Some(s) => Some(s.partial(x, axis)? * self.untwisted(x) + s.value(x) * d),
            None => Some(d),
        }
    }
    fn has_partials(&self) -> bool {
        self.base.has_partials() && self.twist.as_ref().is_none_or(|s| s.has_partials())
    }
}

pub fn make_invertible_perturbation(family: &OddFamily, seed: u64) -> Result<PerturbationSection, BundleError> {
    make_invertible_perturbation_with(family, seed, &PerturbationConfig::default())
}

/// The zero section when `a` is already invertible with room to spare;
/// otherwise, on the Hermitian branch, `q = e^{-(tau / w)^2} f_c(A(y))` with
/// `c` grown geometrically until the margin clears. `f_c` lifts every
/// eigenvalue `l` to `c log(1 + e^{l / c}) > 0` at `tau = 0`. The width `w`
/// is drawn from `seed`.
pub fn make_invertible_perturbation_with(
    family: &OddFamily,
    seed: u64,
    cfg: &PerturbationConfig,
) -> Result<PerturbationSection, BundleError> {
    let zero = PerturbationSection::new(family.clone(), None, 0.0);
    if zero.min_margin() > cfg.margin_floor {
        return Ok(zero);
    }
    let base = family.base().ok_or_else(|| {
        BundleError::Unsupported(format!("no perturbation for a general family with margin {:e}", zero.min_margin()))
    })?;
    let width = case_rng(seed, "perturbation").random_range(0.8..1.25);
    let mut strength = cfg.start;
    let mut best = zero.min_margin();
    for _ in 0..cfg.max_steps {
        let q: Field = Arc::new(SpectralBump { base: base.clone(), twist: family.twist().cloned(), strength, width });
        let section = PerturbationSection::new(family.clone(), Some(q), strength);
        if section.min_margin() > cfg.margin_floor {
            return Ok(section);
        }
        best = best.max(section.min_margin());
        strength *= cfg.growth;
    }
    Err(BundleError::Budget { steps: cfg.max_steps, margin: best })
}

/// `Id + q_12 = (a + q_1)(a + q_2)^{-1}`, a family of Schwartz loops.
pub fn transition(q1: &PerturbationSection, q2: &PerturbationSection) -> Result<SuspendedFamily, BundleError> {
    if q1.family.id() != q2.family.id() {
        return Err(BundleError::Mismatch("sections of different families".into()));
    }
    let field = product(q1.perturbed().field().clone(), inverse(q2.perturbed().field().clone()));
    let family = SuspendedFamily::new(q1.family.domain().clone(), q1.family.grid().clone(), field, DecayClass::Schwartz);
    check_schwartz(&family)?;
    Ok(family)
}

/// `max |g - Id|` at the two outermost nodes on each side, over the domain.
fn check_schwartz(family: &SuspendedFamily) -> Result<(), BundleError> {
    let nodes = family.grid().nodes();
    let ends = [nodes[0], nodes[1], nodes[nodes.len() - 2], nodes[nodes.len() - 1]];
    let n = family.field().size();
    let tail = family
        .domain()
        .points()
        .flat_map(|y| {
            ends.iter()
                .map(|&t| {
                    let mut x = y.clone();
                    x.push(t);
                    linalg::max_abs(&(family.field().value(&x) - linalg::identity(n)))
                })
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max);
    let tol = family.grid().tail_tol();
    if !(tail <= tol) {
        return Err(SuspendError::TailTolerance { tail, tol }.into());
    }
    Ok(())
}

/// `a(x) - b(x)`.
struct Difference(Field, Field);

impl MatrixFamily for Difference {
    fn size(&self) -> usize {
        self.0.size()
    }
    fn value(&self, x: &[f64]) -> CMatrix {
        self.0.value(x) - self.1.value(x)
    }
    fn partial(&self, x: &[f64], axis: usize) -> Option<CMatrix> {
        Some(self.0.partial(x, axis)? - self.1.partial(x, axis)?)
    }
    fn has_partials(&self) -> bool {
        self.0.has_partials() && self.1.has_partials()
    }
}

/// The section with fibres `s (a + q) - a`.
pub fn left_action(s: &SuspendedFamily, q: &PerturbationSection) -> Result<PerturbationSection, BundleError> {
    if s.domain() != q.family.domain() || s.field().size() != q.family.size() {
        return Err(BundleError::Mismatch("loop family and section live over different bases".into()));
    }
    let acted = product(s.field().clone(), q.perturbed().field().clone());
    let q_new: Field = Arc::new(Difference(acted, q.family.elliptic().field().clone()));
    let section = PerturbationSection::new(q.family.clone(), Some(q_new), q.strength);
    if !(section.min_margin() > MARGIN_FLOOR) {
        return Err(BundleError::MarginLoss { margin: section.min_margin() });
    }
    Ok(section)
}

/// `q` acted on by a seeded family of index-zero Schwartz loops, giving a
/// second section unrelated to the first by any symmetry.
pub fn independent_section(q: &PerturbationSection, seed: u64) -> Result<PerturbationSection, BundleError> {
    let family = q.family();
    let mut rng = case_rng(seed, "independent-section");
    let loops: Field = Arc::new(SchwartzFamily::random(&mut rng, family.size(), family.domain().dim(), 0.4));
    let s = SuspendedFamily::new(family.domain().clone(), family.grid().clone(), loops, DecayClass::Schwartz);
    left_action(&s, q)
}
