use std::f64::consts::PI;
use std::sync::Arc;

use super::family::OddFamily;
use super::section::{independent_section, make_invertible_perturbation_with, PerturbationConfig, PerturbationSection};
use super::BundleError;
use crate::chern::{winding_number, DecayClass, DerivativeMode, Field, GroupFamily, MatrixFamily, SuspendedFamily};
use crate::eta::{tau_invariant, RegularizedTraceConfig};
use crate::linalg::{self, CMatrix, C64};
use crate::opcore::{GroupElement, MARGIN_FLOOR};

/// `b(y, T tanh tau) b(y, -T)^{-1}` for an invertible family `b`.
struct Delooped {
    b: Field,
    stretch: f64,
}

impl Delooped {
    fn at(&self, y: &[f64], tau: f64) -> CMatrix {
        let mut x = y.to_vec();
        x.push(tau);
        self.b.value(&x)
    }

    fn start(&self, y: &[f64]) -> CMatrix {
        linalg::inverse(&self.at(y, -self.stretch)).expect("section is invertible")
    }
}

impl MatrixFamily for Delooped {
    fn size(&self) -> usize {
        self.b.size()
    }
    fn value(&self, x: &[f64]) -> CMatrix {
        let (y, tau) = x.split_at(x.len() - 1);
        self.at(y, self.stretch * tau[0].tanh()) * self.start(y)
    }
}

/// `b(y, T) b(y, -T)^{-1}`.
struct IndexSection(Delooped);

impl MatrixFamily for IndexSection {
    fn size(&self) -> usize {
        self.0.size()
    }
    fn value(&self, y: &[f64]) -> CMatrix {
        self.0.at(y, self.0.stretch) * self.0.start(y)
    }
}

/// A half-open family `Q` through the invertible fibres of a section, and
/// its limit `g = Q(+inf)`.
#[derive(Debug, Clone)]
pub struct DeloopingSection {
    pub path: SuspendedFamily,
    pub index_section: GroupFamily,
    /// `T`: the fibre is traversed over `[-T, T]`.
    pub stretch: f64,
}

impl DeloopingSection {
    /// `g` at grid point `idx`.
    pub fn element(&self, idx: usize) -> Result<GroupElement, BundleError> {
        Ok(self.index_section.element(idx)?)
    }

    /// Winding number of `g` over a circle base.
    pub fn winding(&self) -> Result<f64, BundleError> {
        Ok(winding_number(&self.index_section)?)
    }
}

pub fn delooping_section(family: &OddFamily, q: &PerturbationSection) -> Result<DeloopingSection, BundleError> {
    if family.id() != q.family().id() {
        return Err(BundleError::Mismatch("section belongs to another family".into()));
    }
    let stretch = 4.0 * family.radius().max(2.0);
    let b = q.perturbed().field().clone();
    let domain = family.domain().clone();
    for (point, y) in domain.points().enumerate() {
        for t in [-stretch, stretch] {
            let mut x = y.clone();
            x.push(t);
            let margin = linalg::min_singular_value(&b.value(&x));
            if !(margin > MARGIN_FLOOR) {
                return Err(BundleError::PathBudget { point, margin });
            }
        }
    }
    let path = SuspendedFamily::new(domain.clone(), family.grid().clone(), Arc::new(Delooped { b: b.clone(), stretch }), DecayClass::HalfOpen);
    let index_section = GroupFamily::new(domain, Arc::new(IndexSection(Delooped { b, stretch }))).with_mode(DerivativeMode::Spectral);
    Ok(DeloopingSection { path, index_section, stretch })
}

#[derive(Debug, Clone, Default)]
pub struct IndexConfig {
    pub seed: u64,
    pub trace: RegularizedTraceConfig,
    pub perturbation: PerturbationConfig,
}

#[derive(Debug, Clone)]
pub struct IndexCheck {
    /// `oint gamma_A` from the eta form of one fixed section.
    pub lhs: C64,
    /// `-winding(g)` for the index section `g`.
    pub rhs: C64,
    /// `oint d log tau(A) / (2 pi i)` from a second, independent section.
    pub tau_winding: f64,
    /// `eta^0` of the fixed section at the grid points.
    pub eta0: Vec<C64>,
    /// `d eta^0 / dy` at the grid points.
    pub gamma: Vec<C64>,
}

impl IndexCheck {
    /// `max(|lhs - k|, |rhs - k|)` for the integer `k` nearest to `lhs`.
    pub fn integrality(&self) -> f64 {
        let k = self.lhs.re.round();
        (self.lhs - k).norm().max((self.rhs - k).norm())
    }
}

fn circle_step(family: &OddFamily) -> Result<f64, BundleError> {
    let d = family.domain();
    if d.dim() != 1 || !d.axis(0).is_periodic() {
        return Err(BundleError::Mismatch("index checks need a circle base".into()));
    }
    Ok(d.axis(0).step())
}

/// Central differences of `eta^0` of a section along the circle.
pub fn gamma_form(q: &PerturbationSection, cfg: &RegularizedTraceConfig) -> Result<(Vec<C64>, Vec<C64>), BundleError> {
    let h = circle_step(q.family())?;
    let eta0 = q.eta(cfg)?.zero_values();
    let n = eta0.len();
    let gamma = (0..n).map(|k| (eta0[(k + 1) % n] - eta0[(k + n - 1) % n]) / (2.0 * h)).collect();
    Ok((eta0, gamma))
}

/// Total phase change of a closed sequence of unit complex numbers, in turns.
pub fn unwrapped_winding(values: &[C64]) -> f64 {
    let n = values.len();
    (0..n).map(|k| (values[(k + 1) % n] / values[k]).arg()).sum::<f64>() / (2.0 * PI)
}

pub fn index_theorem_check(family: &OddFamily) -> Result<(C64, C64), BundleError> {
    let chk = index_theorem_check_with(family, &IndexConfig { seed: family.seed(), ..IndexConfig::default() })?;
    Ok((chk.lhs, chk.rhs))
}

pub fn index_theorem_check_with(family: &OddFamily, cfg: &IndexConfig) -> Result<IndexCheck, BundleError> {
    let h = circle_step(family)?;
    let q = make_invertible_perturbation_with(family, cfg.seed, &cfg.perturbation)?;
    let (eta0, gamma) = gamma_form(&q, &cfg.trace)?;
    let lhs = gamma.iter().sum::<C64>() * h;
    let rhs = C64::new(-delooping_section(family, &q)?.winding()?, 0.0);
    let other = independent_section(&q, cfg.seed.wrapping_add(1))?;
    let tau = tau_invariant(&other.perturbed(), &cfg.trace)?;
    Ok(IndexCheck { lhs, rhs, tau_winding: unwrapped_winding(&tau), eta0, gamma })
}

/// `max_y |gamma_1(y) - gamma_2(y)|` for two sections of one family.
pub fn basicness_residual(
    q1: &PerturbationSection,
    q2: &PerturbationSection,
    cfg: &RegularizedTraceConfig,
) -> Result<f64, BundleError> {
    if q1.family().id() != q2.family().id() {
        return Err(BundleError::Mismatch("sections of different families".into()));
    }
    let (_, g1) = gamma_form(q1, cfg)?;
    let (_, g2) = gamma_form(q2, cfg)?;
    Ok(g1.iter().zip(&g2).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
}
