use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::FftPlanner;

use super::domain::{difference_stencil, ParamDomain};
use super::ChernError;
use crate::linalg::{self, CMatrix, C64};
use crate::opcore::{GroupElement, MARGIN_FLOOR};
use crate::suspend::{HalfOpenElement, SuspendedElement, TauGrid};

/// A smooth matrix-valued function of finitely many real coordinates.
pub trait MatrixFamily: Send + Sync {
    fn size(&self) -> usize;
    fn value(&self, x: &[f64]) -> CMatrix;
    /// Analytic partial derivative, when the family knows it.
    fn partial(&self, _x: &[f64], _axis: usize) -> Option<CMatrix> {
        None
    }
    fn has_partials(&self) -> bool {
        false
    }
}

pub type Field = Arc<dyn MatrixFamily>;

type ValueFn = Box<dyn Fn(&[f64]) -> CMatrix + Send + Sync>;
type PartialFn = Box<dyn Fn(&[f64], usize) -> CMatrix + Send + Sync>;

/// Family given by closures.
pub struct FnFamily {
    size: usize,
    value: ValueFn,
    partial: Option<PartialFn>,
}

impl FnFamily {
    pub fn new(size: usize, value: impl Fn(&[f64]) -> CMatrix + Send + Sync + 'static) -> Self {
        Self { size, value: Box::new(value), partial: None }
    }

    pub fn with_partials(mut self, partial: impl Fn(&[f64], usize) -> CMatrix + Send + Sync + 'static) -> Self {
        self.partial = Some(Box::new(partial));
        self
    }

    pub fn into_field(self) -> Field {
        Arc::new(self)
    }
}

impl MatrixFamily for FnFamily {
    fn size(&self) -> usize {
        self.size
    }
    fn value(&self, x: &[f64]) -> CMatrix {
        (self.value)(x)
    }
    fn partial(&self, x: &[f64], axis: usize) -> Option<CMatrix> {
        self.partial.as_ref().map(|p| p(x, axis))
    }
    fn has_partials(&self) -> bool {
        self.partial.is_some()
    }
}

struct Product(Field, Field);

impl MatrixFamily for Product {
    fn size(&self) -> usize {
        self.0.size()
    }
    fn value(&self, x: &[f64]) -> CMatrix {
        self.0.value(x) * self.1.value(x)
    }
    fn partial(&self, x: &[f64], axis: usize) -> Option<CMatrix> {
        let (da, db) = (self.0.partial(x, axis)?, self.1.partial(x, axis)?);
        Some(da * self.1.value(x) + self.0.value(x) * db)
    }
    fn has_partials(&self) -> bool {
        self.0.has_partials() && self.1.has_partials()
    }
}

struct Sum(Field, Field);

impl MatrixFamily for Sum {
    fn size(&self) -> usize {
        self.0.size()
    }
    fn value(&self, x: &[f64]) -> CMatrix {
        self.0.value(x) + self.1.value(x)
    }
    fn partial(&self, x: &[f64], axis: usize) -> Option<CMatrix> {
        Some(self.0.partial(x, axis)? + self.1.partial(x, axis)?)
    }
    fn has_partials(&self) -> bool {
        self.0.has_partials() && self.1.has_partials()
    }
}

struct Inverse(Field);

impl MatrixFamily for Inverse {
    fn size(&self) -> usize {
        self.0.size()
    }
    fn value(&self, x: &[f64]) -> CMatrix {
        let v = self.0.value(x);
        linalg::inverse(&v).unwrap_or_else(|| CMatrix::from_element(v.nrows(), v.ncols(), C64::new(f64::NAN, 0.0)))
    }
    fn partial(&self, x: &[f64], axis: usize) -> Option<CMatrix> {
        let d = self.0.partial(x, axis)?;
        let inv = self.value(x);
        Some(-(&inv * d * &inv))
    }
    fn has_partials(&self) -> bool {
        self.0.has_partials()
    }
}

struct Constant(CMatrix);

impl MatrixFamily for Constant {
    fn size(&self) -> usize {
        self.0.nrows()
    }
    fn value(&self, _x: &[f64]) -> CMatrix {
        self.0.clone()
    }
    fn partial(&self, _x: &[f64], _axis: usize) -> Option<CMatrix> {
        Some(CMatrix::zeros(self.0.nrows(), self.0.ncols()))
    }
    fn has_partials(&self) -> bool {
        true
    }
}

/// Restriction to `tau = const` of a family whose last coordinate is `tau`.
struct Slice {
    field: Field,
    tau: f64,
}

impl MatrixFamily for Slice {
    fn size(&self) -> usize {
        self.field.size()
    }
    fn value(&self, x: &[f64]) -> CMatrix {
        let mut y = x.to_vec();
        y.push(self.tau);
        self.field.value(&y)
    }
    fn partial(&self, x: &[f64], axis: usize) -> Option<CMatrix> {
        let mut y = x.to_vec();
        y.push(self.tau);
        self.field.partial(&y, axis)
    }
    fn has_partials(&self) -> bool {
        self.field.has_partials()
    }
}

/// Pointwise product `a(x) b(x)`.
pub fn product(a: Field, b: Field) -> Field {
    Arc::new(Product(a, b))
}

/// Pointwise sum `a(x) + b(x)`.
pub fn sum(a: Field, b: Field) -> Field {
    Arc::new(Sum(a, b))
}

/// Pointwise inverse `a(x)^{-1}`.
pub fn inverse(a: Field) -> Field {
    Arc::new(Inverse(a))
}

pub fn constant(m: CMatrix) -> Field {
    Arc::new(Constant(m))
}

pub fn slice_last(field: Field, tau: f64) -> Field {
    Arc::new(Slice { field, tau })
}

/// A family of the last coordinate only, seen over `dim` leading coordinates.
struct LastOnly {
    field: Field,
    dim: usize,
}

impl MatrixFamily for LastOnly {
    fn size(&self) -> usize {
        self.field.size()
    }
    fn value(&self, x: &[f64]) -> CMatrix {
        self.field.value(&x[self.dim..])
    }
    fn partial(&self, x: &[f64], axis: usize) -> Option<CMatrix> {
        if axis < self.dim {
            let n = self.size();
            return Some(CMatrix::zeros(n, n));
        }
        self.field.partial(&x[self.dim..], 0)
    }
    fn has_partials(&self) -> bool {
        self.field.has_partials()
    }
}

/// Extends a family of `tau` alone to `(y_1, .., y_dim, tau)`.
pub fn tau_only(field: Field, dim: usize) -> Field {
    Arc::new(LastOnly { field, dim })
}

/// Central difference of `f` along `axis` with step `h`.
pub fn central_difference(f: &dyn MatrixFamily, x: &[f64], axis: usize, h: f64) -> CMatrix {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[axis] += h;
    xm[axis] -= h;
    (f.value(&xp) - f.value(&xm)) * C64::new(0.5 / h, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivativeMode {
    /// Analytic partials when the family supplies them, grid differences otherwise.
    #[default]
    Auto,
    Analytic,
    /// Second-order differences over the grid.
    Central,
    /// FFT differentiation along periodic axes.
    Spectral,
}

/// Values, inverses and partial derivatives sampled at every grid point.
#[derive(Debug, Clone)]
pub struct Jets {
    pub values: Vec<CMatrix>,
    pub inverses: Vec<CMatrix>,
    /// `partials[p][axis]`.
    pub partials: Vec<Vec<CMatrix>>,
}

/// A family `Y -> G` over a gridded parameter domain.
#[derive(Clone)]
pub struct GroupFamily {
    domain: ParamDomain,
    field: Field,
    mode: DerivativeMode,
}

impl std::fmt::Debug for GroupFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GroupFamily").field("domain", &self.domain).field("mode", &self.mode).finish()
    }
}

impl GroupFamily {
    pub fn new(domain: ParamDomain, field: Field) -> Self {
        Self { domain, field, mode: DerivativeMode::Auto }
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn size(&self) -> usize {
        self.field.size()
    }

    /// Same field on another grid.
    pub fn on_domain(&self, domain: ParamDomain) -> Self {
        Self { domain, field: self.field.clone(), mode: self.mode }
    }

    pub fn element(&self, idx: usize) -> Result<GroupElement, ChernError> {
        Ok(GroupElement::from_value(self.field.value(&self.domain.point(idx)))?)
    }

    fn resolved_mode(&self) -> Result<DerivativeMode, ChernError> {
        match self.mode {
            DerivativeMode::Auto if self.field.has_partials() => Ok(DerivativeMode::Analytic),
            DerivativeMode::Auto => Ok(DerivativeMode::Central),
            DerivativeMode::Analytic if !self.field.has_partials() => Err(ChernError::MissingDerivative),
            DerivativeMode::Spectral if self.domain.axes().iter().any(|a| !a.is_periodic()) => {
                Err(ChernError::InvalidDomain("spectral derivatives need periodic axes".into()))
            }
            m => Ok(m),
        }
    }

    pub fn jets(&self) -> Result<Jets, ChernError> {
        let mode = self.resolved_mode()?;
        let d = self.domain.dim();
        let values: Vec<CMatrix> = (0..self.domain.len())
            .into_par_iter()
            .map(|i| self.field.value(&self.domain.point(i)))
            .collect();
        let inverses = values
            .par_iter()
            .enumerate()
            .map(|(i, v)| {
                if !linalg::is_finite(v) {
                    return Err(ChernError::NonFinite { point: i });
                }
                let margin = linalg::min_singular_value(v);
                if !(margin > MARGIN_FLOOR) {
                    return Err(ChernError::NotInvertible { point: i, margin });
                }
                linalg::inverse(v).ok_or(ChernError::NotInvertible { point: i, margin })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let partials: Vec<Vec<CMatrix>> = match mode {
            DerivativeMode::Analytic => (0..self.domain.len())
                .into_par_iter()
                .map(|i| {
                    let x = self.domain.point(i);
                    (0..d).map(|k| self.field.partial(&x, k).expect("checked has_partials")).collect()
                })
                .collect(),
            DerivativeMode::Central => (0..self.domain.len())
                .into_par_iter()
                .map(|i| (0..d).map(|k| stencil_apply(&self.domain, &values, i, k)).collect())
                .collect(),
            DerivativeMode::Spectral => spectral_partials(&self.domain, &values),
            DerivativeMode::Auto => unreachable!("resolved above"),
        };
        Ok(Jets { values, inverses, partials })
    }

    /// Checks invertibility everywhere and, for analytic families, that the
    /// supplied partials match central differences to second order.
    pub fn validate(&self) -> Result<(), ChernError> {
        self.jets()?;
        if !self.field.has_partials() {
            return Ok(());
        }
        let stride = (self.domain.len() / 8).max(1);
        for i in (0..self.domain.len()).step_by(stride) {
            let x = self.domain.point(i);
            for k in 0..self.domain.dim() {
                let h = self.domain.axis(k).step();
                let exact = self.field.partial(&x, k).expect("has partials");
                let coarse = linalg::max_abs(&(central_difference(self.field.as_ref(), &x, k, h) - &exact));
                let fine = linalg::max_abs(&(central_difference(self.field.as_ref(), &x, k, 0.5 * h) - &exact));
                let scale = 1.0 + linalg::max_abs(&exact);
                if fine > 1e-7 * scale && fine > 0.4 * coarse {
                    return Err(ChernError::DerivativeMismatch { point: i, axis: k, error: coarse });
                }
            }
        }
        Ok(())
    }
}

fn stencil_apply(domain: &ParamDomain, values: &[CMatrix], idx: usize, axis: usize) -> CMatrix {
    let n = values[idx].nrows();
    difference_stencil(domain, idx, axis)
        .into_iter()
        .fold(CMatrix::zeros(n, n), |acc, (j, w)| acc + &values[j] * C64::new(w, 0.0))
}

/// Derivative of one periodic line of samples with the given period.
pub fn spectral_derivative_periodic(line: &[C64], period: f64) -> Vec<C64> {
    let n = line.len();
    let mut planner = FftPlanner::new();
    let mut buf = line.to_vec();
    planner.plan_fft_forward(n).process(&mut buf);
    for (m, z) in buf.iter_mut().enumerate() {
        let k = if 2 * m < n {
            m as f64
        } else if 2 * m == n {
            0.0
        } else {
            m as f64 - n as f64
        };
        *z *= C64::new(0.0, 2.0 * PI * k / period) / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}

fn spectral_partials(domain: &ParamDomain, values: &[CMatrix]) -> Vec<Vec<CMatrix>> {
    let d = domain.dim();
    let n = values[0].nrows();
    let mut out = vec![vec![CMatrix::zeros(n, n); d]; values.len()];
    for axis in 0..d {
        let a = domain.axis(axis);
        let period = a.end - a.start;
        for start in 0..domain.len() {
            if domain.multi_index(start)[axis] != 0 {
                continue;
            }
            let line: Vec<usize> = (0..a.n).map(|k| domain.neighbor(start, axis, k as isize).expect("periodic")).collect();
            for r in 0..n {
                for c in 0..n {
                    let samples: Vec<C64> = line.iter().map(|&p| values[p][(r, c)]).collect();
                    for (&p, v) in line.iter().zip(spectral_derivative_periodic(&samples, period)) {
                        out[p][axis][(r, c)] = v;
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayClass {
    /// `a(y, tau) - Id` Schwartz in `tau`.
    Schwartz,
    /// `a -> Id` at `-inf`, flat to a constant at `+inf`.
    HalfOpen,
}

/// Samples of a suspended family along the `tau`-line over one base point.
#[derive(Debug, Clone)]
pub struct LineJets {
    pub values: Vec<CMatrix>,
    pub inverses: Vec<CMatrix>,
    pub dtau: Vec<CMatrix>,
    /// `dy[axis][node]`.
    pub dy: Vec<Vec<CMatrix>>,
}

/// A family over `Y x R_tau`; the field takes `(y_1, .., y_d, tau)`.
#[derive(Clone)]
pub struct SuspendedFamily {
    domain: ParamDomain,
    grid: TauGrid,
    field: Field,
    class: DecayClass,
    mode: DerivativeMode,
}

impl std::fmt::Debug for SuspendedFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SuspendedFamily")
            .field("domain", &self.domain)
            .field("grid", &self.grid)
            .field("class", &self.class)
            .finish()
    }
}

impl SuspendedFamily {
    pub fn new(domain: ParamDomain, grid: TauGrid, field: Field, class: DecayClass) -> Self {
        Self { domain, grid, field, class, mode: DerivativeMode::Auto }
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
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

    pub fn class(&self) -> DecayClass {
        self.class
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

    /// Value at `+inf`, read off the outermost node.
    pub fn limit_field(&self) -> Field {
        let tau = *self.grid.nodes().last().expect("non-empty grid");
        slice_last(self.field.clone(), tau)
    }

    pub fn limit_family(&self) -> GroupFamily {
        GroupFamily::new(self.domain.clone(), self.limit_field()).with_mode(self.mode)
    }

    fn at(&self, y: &[f64], tau: f64) -> CMatrix {
        let mut x = y.to_vec();
        x.push(tau);
        self.field.value(&x)
    }

    fn y_partial(&self, y: &[f64], tau: f64, axis: usize, analytic: bool) -> CMatrix {
        let mut x = y.to_vec();
        x.push(tau);
        if analytic {
            return self.field.partial(&x, axis).expect("checked has_partials");
        }
        let a = self.domain.axis(axis);
        let h = a.step();
        let idx = ((y[axis] - a.start) / h).round();
        let at_start = !a.is_periodic() && idx <= 0.0;
        let at_end = !a.is_periodic() && idx >= (a.n - 1) as f64;
        let shifted = |s: f64| {
            let mut z = x.clone();
            z[axis] += s * h;
            self.field.value(&z)
        };
        let w = |c: f64| C64::new(c / h, 0.0);
        if at_start {
            self.field.value(&x) * w(-1.5) + shifted(1.0) * w(2.0) + shifted(2.0) * w(-0.5)
        } else if at_end {
            self.field.value(&x) * w(1.5) + shifted(-1.0) * w(-2.0) + shifted(-2.0) * w(0.5)
        } else {
            (shifted(1.0) - shifted(-1.0)) * w(0.5)
        }
    }

    /// Samples and derivatives along the `tau`-line over base point `y_idx`.
    pub fn line(&self, y_idx: usize) -> Result<LineJets, ChernError> {
        let analytic = match self.mode {
            DerivativeMode::Auto => self.field.has_partials(),
            DerivativeMode::Analytic if !self.field.has_partials() => return Err(ChernError::MissingDerivative),
            DerivativeMode::Analytic => true,
            DerivativeMode::Central => false,
            DerivativeMode::Spectral => {
                return Err(ChernError::InvalidDomain("spectral base derivatives are not supported for suspended families".into()))
            }
        };
        let y = self.domain.point(y_idx);
        let nodes = self.grid.nodes();
        let values: Vec<CMatrix> = nodes.iter().map(|&t| self.at(&y, t)).collect();
        let n = self.size();
        let id = linalg::identity(n);
        let k = values.len();
        let minus_tail = linalg::max_abs(&(&values[0] - &id)).max(linalg::max_abs(&(&values[1] - &id)));
        let plus_tail = match self.class {
            DecayClass::Schwartz => linalg::max_abs(&(&values[k - 1] - &id)).max(linalg::max_abs(&(&values[k - 2] - &id))),
            DecayClass::HalfOpen => linalg::max_abs(&(&values[k - 1] - &values[k - 2])),
        };
        let tail = minus_tail.max(plus_tail);
        if tail > self.grid.tail_tol() {
            return Err(ChernError::Decay { point: y_idx, tail });
        }
        let inverses = values
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let margin = linalg::min_singular_value(v);
                if !(margin > MARGIN_FLOOR) {
                    return Err(ChernError::NotInvertible { point: y_idx * k + j, margin });
                }
                linalg::inverse(v).ok_or(ChernError::NotInvertible { point: y_idx * k + j, margin })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let tau_axis = self.domain.dim();
        let dtau = if analytic {
            nodes
                .iter()
                .map(|&t| {
                    let mut x = y.clone();
                    x.push(t);
                    self.field.partial(&x, tau_axis).expect("checked has_partials")
                })
                .collect()
        } else {
            let plus = values[k - 1].clone();
            let mut out = vec![CMatrix::zeros(n, n); k];
            for r in 0..n {
                for c in 0..n {
                    let line: Vec<C64> = values.iter().map(|m| m[(r, c)]).collect();
                    let d = match self.class {
                        DecayClass::Schwartz => self.grid.derivative_flat(&line),
                        DecayClass::HalfOpen => self.grid.derivative(&line, id[(r, c)], plus[(r, c)]),
                    };
                    for (dst, v) in out.iter_mut().zip(d) {
                        dst[(r, c)] = v;
                    }
                }
            }
            out
        };
        let dy = (0..self.domain.dim())
            .map(|axis| nodes.iter().map(|&t| self.y_partial(&y, t, axis, analytic)).collect())
            .collect();
        Ok(LineJets { values, inverses, dtau, dy })
    }

    pub fn suspended_element(&self, y_idx: usize) -> Result<SuspendedElement, ChernError> {
        let y = self.domain.point(y_idx);
        let id = linalg::identity(self.size());
        Ok(SuspendedElement::from_fn(self.grid.clone(), |t| self.at(&y, t) - &id)?)
    }

    pub fn half_open_element(&self, y_idx: usize) -> Result<HalfOpenElement, ChernError> {
        let y = self.domain.point(y_idx);
        let id = linalg::identity(self.size());
        let limit = GroupElement::from_value(self.at(&y, *self.grid.nodes().last().expect("non-empty")))?;
        Ok(HalfOpenElement::from_fn(self.grid.clone(), limit, |t| self.at(&y, t) - &id)?)
    }
}
