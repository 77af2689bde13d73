use std::sync::Arc;

use rayon::prelude::*;

use super::regularized::{regularized_trace_vec, RegularizedTraceConfig};
use super::{EtaError, EtaValue};
use crate::chern::{
    ch_even, inverse, odd_coefficient, odd_component_from_x, product, sum, DecayClass, Field, FormField,
    MatrixFamily, ParamDomain, SuspendedFamily,
};
use crate::linalg::{self, increasing_tuples, CMatrix, C64, I};
use crate::opcore::MARGIN_FLOOR;
use crate::suspend::TauGrid;

const FD_STEP: f64 = 1e-5;

/// A fully elliptic family `a(y, tau)` of product type over a parameter domain.
///
/// `model` is a closed-form symbol, invertible for `|tau| >= radius`, such
/// that `field - model` is Schwartz in `tau`; the typical case is
/// `a = A(y) + i tau + q(y, tau)` with model `A(y) + i tau`.
#[derive(Clone)]
pub struct EllipticFamily {
    domain: ParamDomain,
    grid: TauGrid,
    field: Field,
    model: Field,
    radius: f64,
}

impl std::fmt::Debug for EllipticFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EllipticFamily")
            .field("domain", &self.domain)
            .field("grid", &self.grid)
            .field("radius", &self.radius)
            .finish()
    }
}

/// `A(y) + i tau` over `(y, tau)`.
struct LinearModel {
    base: Field,
}

impl MatrixFamily for LinearModel {
    fn size(&self) -> usize {
        self.base.size()
    }
    fn value(&self, x: &[f64]) -> CMatrix {
        let (y, tau) = x.split_at(x.len() - 1);
        self.base.value(y) + linalg::identity(self.size()) * C64::new(0.0, tau[0])
    }
    fn partial(&self, x: &[f64], axis: usize) -> Option<CMatrix> {
        let y = &x[..x.len() - 1];
        if axis == y.len() {
            return Some(linalg::identity(self.size()) * I);
        }
        self.base.partial(y, axis)
    }
    fn has_partials(&self) -> bool {
        self.base.has_partials()
    }
}

impl EllipticFamily {
    pub fn from_parts(domain: ParamDomain, grid: TauGrid, field: Field, model: Field, radius: f64) -> Result<Self, EtaError> {
        if field.size() != model.size() {
            return Err(EtaError::Config("field and model sizes differ".into()));
        }
        if !(radius > 0.0) {
            return Err(EtaError::Config(format!("model radius {radius} must be positive")));
        }
        Ok(Self { domain, grid, field, model, radius })
    }

    /// `A(y) + i tau` for a base family `A` on `domain`.
    pub fn linear(domain: ParamDomain, grid: TauGrid, base: Field) -> Self {
        let norm = domain.points().map(|y| base.value(&y).norm()).fold(0.0, f64::max);
        let model: Field = Arc::new(LinearModel { base });
        Self { domain, grid, field: model.clone(), model, radius: 1.0 + 1.5 * norm }
    }

    /// `C + i tau` with a constant matrix.
    pub fn constant(domain: ParamDomain, grid: TauGrid, c: CMatrix) -> Self {
        Self::linear(domain, grid, crate::chern::constant(c))
    }

    /// Adds a perturbation `q(y, tau)`, Schwartz in `tau`.
    pub fn with_perturbation(&self, q: Field) -> Self {
        Self { field: sum(self.field.clone(), q), ..self.clone() }
    }

    /// Pointwise `s(y, tau) a(y, tau)` for a Schwartz loop `s`.
    pub fn left_multiply(&self, s: Field) -> Self {
        Self { field: product(s, self.field.clone()), ..self.clone() }
    }

    /// Pointwise product `a b`.
    pub fn product(&self, other: &Self) -> Result<Self, EtaError> {
        self.check_compatible(other)?;
        Ok(Self {
            field: product(self.field.clone(), other.field.clone()),
            model: product(self.model.clone(), other.model.clone()),
            radius: self.radius.max(other.radius),
            ..self.clone()
        })
    }

    /// Pointwise inverse `a^{-1}`.
    pub fn inverse(&self) -> Self {
        Self { field: inverse(self.field.clone()), model: inverse(self.model.clone()), ..self.clone() }
    }

    fn check_compatible(&self, other: &Self) -> Result<(), EtaError> {
        if self.domain != other.domain || self.grid != other.grid || self.size() != other.size() {
            return Err(EtaError::Config("families must share domain, grid and size".into()));
        }
        Ok(())
    }

    pub fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    pub fn grid(&self) -> &TauGrid {
        &self.grid
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn model(&self) -> &Field {
        &self.model
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn size(&self) -> usize {
        self.field.size()
    }

    pub fn on_domain(&self, domain: ParamDomain) -> Self {
        Self { domain, ..self.clone() }
    }

    pub fn with_grid(&self, grid: TauGrid) -> Self {
        Self { grid, ..self.clone() }
    }

    /// `a' a^{-1}` as a family of Schwartz loops, for two families sharing a model.
    pub fn relative_loop(&self, other: &Self) -> Result<SuspendedFamily, EtaError> {
        self.check_compatible(other)?;
        let field = product(other.field.clone(), inverse(self.field.clone()));
        Ok(SuspendedFamily::new(self.domain.clone(), self.grid.clone(), field, DecayClass::Schwartz))
    }

    /// Value at `(y, tau)`; for fixtures and diagnostics.
    pub fn value(&self, y: &[f64], tau: f64) -> CMatrix {
        let mut x = y.to_vec();
        x.push(tau);
        self.field.value(&x)
    }
}

/// Value and all partial derivatives of a family at `x`.
fn jet(f: &dyn MatrixFamily, x: &[f64]) -> (CMatrix, Vec<CMatrix>) {
    let value = f.value(x);
    let partials = (0..x.len())
        .map(|axis| {
            f.partial(x, axis).unwrap_or_else(|| {
                let h = FD_STEP * x[axis].abs().max(1.0);
                crate::chern::central_difference(f, x, axis, h)
            })
        })
        .collect();
    (value, partials)
}

/// `[deg 0, deg 2 components...]` of the `d tau`-coefficient of the odd character at `x`.
fn integrand(f: &dyn MatrixFamily, x: &[f64], pairs: &[Vec<usize>]) -> Option<Vec<C64>> {
    let (v, ds) = jet(f, x);
    if !(linalg::min_singular_value(&v) > MARGIN_FLOOR) {
        return None;
    }
    let inv = linalg::inverse(&v)?;
    let d = x.len() - 1;
    let xt = &inv * &ds[d];
    let mut out = Vec::with_capacity(1 + pairs.len());
    out.push(odd_coefficient(0) * linalg::trace(&xt));
    if !pairs.is_empty() {
        let xy: Vec<CMatrix> = ds[..d].iter().map(|m| &inv * m).collect();
        out.extend(pairs.iter().map(|p| odd_component_from_x(&[&xt, &xy[p[0]], &xy[p[1]]])));
    }
    Some(out)
}

fn eta_at_point(family: &EllipticFamily, p: usize, pairs: &[Vec<usize>], cfg: &RegularizedTraceConfig) -> Result<Vec<C64>, EtaError> {
    let y = family.domain.point(p);
    let dim = 1 + pairs.len();
    let at = |tau: f64| {
        let mut x = y.clone();
        x.push(tau);
        x
    };
    for (j, &tau) in family.grid.nodes().iter().enumerate() {
        let v = family.value(&y, tau);
        let margin = linalg::min_singular_value(&v);
        if !(margin > MARGIN_FLOOR) {
            return Err(EtaError::NotInvertibleAt { point: p, node: j, margin });
        }
    }
    let full = |tau: f64| integrand(family.field.as_ref(), &at(tau), pairs).unwrap_or_else(|| vec![C64::new(f64::NAN, 0.0); dim]);
    let radii = cfg.radii_for(family.radius);
    let t0 = radii.first().copied().unwrap_or(family.radius);
    // beyond the first radius the fit assumes the closed-form symbol alone
    let tail = [-t0, t0]
        .iter()
        .map(|&t| {
            let model = integrand(family.model.as_ref(), &at(t), pairs).unwrap_or_else(|| vec![C64::new(f64::NAN, 0.0); dim]);
            full(t).iter().zip(&model).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let tol = family.grid.tail_tol();
    if !(tail <= tol) {
        return Err(EtaError::Remainder { point: p, source: crate::suspend::SuspendError::TailTolerance { tail, tol } });
    }
    Ok(regularized_trace_vec(&full, dim, family.radius, cfg)?.into_iter().map(|v| v.value).collect())
}

/// Eta form of an elliptic family: the regularized fibre integral of the
/// `d tau`-coefficient of the odd character, in degrees 0 and (for `d >= 2`) 2.
pub fn family_eta(family: &EllipticFamily, cfg: &RegularizedTraceConfig) -> Result<EtaValue, EtaError> {
    let domain = family.domain.clone();
    let pairs = increasing_tuples(domain.dim(), 2);
    let values = (0..domain.len())
        .into_par_iter()
        .map(|p| eta_at_point(family, p, &pairs, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let mut forms = vec![FormField::scalar(domain.clone(), values.iter().map(|v| v[0]).collect())?];
    if domain.dim() >= 2 {
        forms.push(FormField::from_fn(domain, 2, |p| values[p][1..].to_vec())?);
    }
    EtaValue::new(forms)
}

/// `exp(2 pi i eta^0)` at every grid point.
pub fn tau_invariant(family: &EllipticFamily, cfg: &RegularizedTraceConfig) -> Result<Vec<C64>, EtaError> {
    let eta = family_eta(family, cfg)?;
    Ok(eta.zero_values().iter().map(|z| (linalg::TWO_PI_I * z).exp()).collect())
}

/// Largest `|eta(a^{-1}) + eta(a)|` over grid points and degrees.
pub fn eta_inverse_check(family: &EllipticFamily, cfg: &RegularizedTraceConfig) -> Result<f64, EtaError> {
    let eta = family_eta(family, cfg)?;
    let inv = family_eta(&family.inverse(), cfg)?;
    Ok(eta.add(&inv)?.forms().iter().map(FormField::max_abs).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicativityResidual {
    /// `max_y |eta^0(a') - eta^0(a) - ch_even^0(a' a^{-1})|`.
    pub degree0: f64,
    /// `|int_Y (eta^2(a') - eta^2(a) - ch_even^2(a' a^{-1}))|` on a closed
    /// 2-dimensional domain, where the exact term integrates to zero.
    pub degree2: Option<f64>,
    /// Mean of `ch_even^0(a' a^{-1})` over the domain.
    pub loop_index: f64,
}

impl MultiplicativityResidual {
    pub fn max(&self) -> f64 {
        self.degree0.max(self.degree2.unwrap_or(0.0))
    }
}

/// Compares `eta(a') - eta(a)` with the even character of the Schwartz loop
/// `a' a^{-1}` relating two families with the same model.
pub fn eta_multiplicativity_check(
    a: &EllipticFamily,
    a_prime: &EllipticFamily,
    cfg: &RegularizedTraceConfig,
) -> Result<MultiplicativityResidual, EtaError> {
    let s = a.relative_loop(a_prime)?;
    let ch = ch_even(&s)?;
    let (ea, eb) = (family_eta(a, cfg)?, family_eta(a_prime, cfg)?);
    let diff0 = eb.zero_form().sub(ea.zero_form())?.sub(&ch[0])?;
    let domain = a.domain();
    let degree2 = if domain.dim() == 2 && domain.axes().iter().all(|ax| ax.is_periodic()) {
        let d2 = eb.forms()[1].sub(&ea.forms()[1])?.sub(&ch[1])?;
        Some(d2.integrate(0).norm())
    } else {
        None
    };
    let values = ch[0].component_values(0);
    let loop_index = values.iter().map(|z| z.re).sum::<f64>() / values.len() as f64;
    Ok(MultiplicativityResidual { degree0: diff0.max_abs(), degree2, loop_index })
}

struct MinusIdentity(Field);

impl MatrixFamily for MinusIdentity {
    fn size(&self) -> usize {
        self.0.size()
    }
    fn value(&self, x: &[f64]) -> CMatrix {
        self.0.value(x) - linalg::identity(self.size())
    }
    fn partial(&self, x: &[f64], axis: usize) -> Option<CMatrix> {
        self.0.partial(x, axis)
    }
    fn has_partials(&self) -> bool {
        self.0.has_partials()
    }
}

/// `g - Id` for a family of Schwartz loops `g`: a Schwartz perturbation.
pub fn loop_perturbation(loops: Field) -> Field {
    Arc::new(MinusIdentity(loops))
}
