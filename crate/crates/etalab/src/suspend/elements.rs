use super::grid::{map_entries, TauGrid};
use super::SuspendError;
use crate::linalg::{self, CMatrix, C64};
use crate::opcore::{GroupElement, MARGIN_FLOOR};

fn check_samples(grid: &TauGrid, samples: &[CMatrix]) -> Result<usize, SuspendError> {
    if samples.len() != grid.n_nodes() {
        return Err(SuspendError::LengthMismatch { expected: grid.n_nodes(), got: samples.len() });
    }
    let n = samples[0].nrows();
    for (j, a) in samples.iter().enumerate() {
        if a.nrows() != n || a.ncols() != n {
            return Err(SuspendError::InvalidGrid(format!("sample {j} has inconsistent shape")));
        }
        if !linalg::is_finite(a) {
            return Err(SuspendError::NonFinite { node: j });
        }
        let margin = linalg::min_singular_value(&(linalg::identity(n) + a));
        if !(margin > MARGIN_FLOOR) {
            return Err(SuspendError::NotInvertible { node: j, margin });
        }
    }
    Ok(n)
}

fn outer_tail(samples: &[CMatrix], reference_plus: Option<&CMatrix>) -> (f64, f64) {
    let k = samples.len();
    let minus = linalg::max_abs(&samples[0]).max(linalg::max_abs(&samples[1]));
    let plus = match reference_plus {
        Some(r) => linalg::max_abs(&(&samples[k - 1] - r)).max(linalg::max_abs(&(&samples[k - 2] - r))),
        None => linalg::max_abs(&samples[k - 1]).max(linalg::max_abs(&samples[k - 2])),
    };
    (minus, plus)
}

/// A loop `tau -> Id + A(tau)` with `A` Schwartz.
#[derive(Debug, Clone, PartialEq)]
pub struct SuspendedElement {
    grid: TauGrid,
    samples: Vec<CMatrix>,
}

impl SuspendedElement {
    pub fn new(grid: TauGrid, samples: Vec<CMatrix>) -> Result<Self, SuspendError> {
        check_samples(&grid, &samples)?;
        let (minus, plus) = outer_tail(&samples, None);
        let tail = minus.max(plus);
        if tail > grid.tail_tol() {
            return Err(SuspendError::TailTolerance { tail, tol: grid.tail_tol() });
        }
        Ok(Self { grid, samples })
    }

    /// Samples the perturbation `A(tau)` at the grid nodes.
    pub fn from_fn(grid: TauGrid, f: impl Fn(f64) -> CMatrix) -> Result<Self, SuspendError> {
        let samples = grid.nodes().iter().map(|&t| f(t)).collect();
        Self::new(grid, samples)
    }

    pub fn identity(grid: TauGrid, n: usize) -> Self {
        let samples = vec![CMatrix::zeros(n, n); grid.n_nodes()];
        Self { grid, samples }
    }

    pub fn grid(&self) -> &TauGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.samples[0].nrows()
    }

    pub fn samples(&self) -> &[CMatrix] {
        &self.samples
    }

    pub fn values(&self) -> Vec<CMatrix> {
        let id = linalg::identity(self.dim());
        self.samples.iter().map(|a| &id + a).collect()
    }

    /// `d/dtau` of the samples.
    pub fn derivative(&self) -> Vec<CMatrix> {
        map_entries(&self.samples, |line| self.grid.derivative_flat(line))
    }

    pub fn compose(&self, other: &Self) -> Result<Self, SuspendError> {
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a + b + a * b).collect();
        Self::new(self.grid.clone(), samples)
    }

    pub fn inverse(&self) -> Result<Self, SuspendError> {
        let id = linalg::identity(self.dim());
        let samples = self
            .values()
            .iter()
            .enumerate()
            .map(|(j, v)| linalg::inverse(v).map(|m| m - &id).ok_or(SuspendError::NotInvertible { node: j, margin: 0.0 }))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(self.grid.clone(), samples)
    }

    /// The inclusion of loops into paths that end at the identity.
    pub fn embed(&self) -> HalfOpenElement {
        HalfOpenElement {
            grid: self.grid.clone(),
            samples: self.samples.clone(),
            limit: GroupElement::identity(self.dim()),
        }
    }
}

/// A path `tau -> Id + A(tau)` from `Id` at `-inf` to a constant `g` at `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfOpenElement {
    grid: TauGrid,
    samples: Vec<CMatrix>,
    limit: GroupElement,
}

impl HalfOpenElement {
    pub fn new(grid: TauGrid, samples: Vec<CMatrix>, limit: GroupElement) -> Result<Self, SuspendError> {
        let n = check_samples(&grid, &samples)?;
        if n != limit.dim() {
            return Err(SuspendError::InvalidGrid(format!("limit has dimension {} but samples {n}", limit.dim())));
        }
        let (minus, plus) = outer_tail(&samples, Some(limit.perturbation().matrix()));
        let tail = minus.max(plus);
        if tail > grid.tail_tol() {
            return Err(SuspendError::TailTolerance { tail, tol: grid.tail_tol() });
        }
        Ok(Self { grid, samples, limit })
    }

    pub fn from_fn(grid: TauGrid, limit: GroupElement, f: impl Fn(f64) -> CMatrix) -> Result<Self, SuspendError> {
        let samples = grid.nodes().iter().map(|&t| f(t)).collect();
        Self::new(grid, samples, limit)
    }

    pub fn grid(&self) -> &TauGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.limit.dim()
    }

    pub fn samples(&self) -> &[CMatrix] {
        &self.samples
    }

    pub fn limit(&self) -> &GroupElement {
        &self.limit
    }

    pub fn values(&self) -> Vec<CMatrix> {
        let id = linalg::identity(self.dim());
        self.samples.iter().map(|a| &id + a).collect()
    }

    /// `d/dtau` of the samples, using the known limits at both ends.
    pub fn derivative(&self) -> Vec<CMatrix> {
        let plus = self.limit.perturbation().matrix();
        let n = self.dim();
        let mut out = vec![CMatrix::zeros(n, n); self.samples.len()];
        for r in 0..n {
            for c in 0..n {
                let line: Vec<C64> = self.samples.iter().map(|m| m[(r, c)]).collect();
                let d = self.grid.derivative(&line, C64::new(0.0, 0.0), plus[(r, c)]);
                for (dst, v) in out.iter_mut().zip(d) {
                    dst[(r, c)] = v;
                }
            }
        }
        out
    }

    /// Value at an arbitrary compactified coordinate `u` in `[0, 1]`.
    pub fn value_at_u(&self, u: f64) -> CMatrix {
        let n = self.dim();
        let id = linalg::identity(n);
        if u <= 0.0 {
            return id;
        }
        if u >= 1.0 {
            return self.limit.value();
        }
        let tau = self.grid.tau_of_u(u);
        let r = super::grid::ramp(tau);
        let plus = self.limit.perturbation().matrix();
        let mut out = CMatrix::zeros(n, n);
        for row in 0..n {
            for col in 0..n {
                let reduced: Vec<C64> = self
                    .samples
                    .iter()
                    .zip(self.grid.nodes())
                    .map(|(m, &t)| m[(row, col)] - plus[(row, col)] * super::grid::ramp(t))
                    .collect();
                out[(row, col)] = self.grid.interpolate_flat(&reduced, u) + plus[(row, col)] * r;
            }
        }
        id + out
    }

    pub fn compose(&self, other: &Self) -> Result<Self, SuspendError> {
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a + b + a * b).collect();
        let limit = crate::opcore::compose(&self.limit, &other.limit)?;
        Self::new(self.grid.clone(), samples, limit)
    }
}

/// `sum_k C_k tau^k + s(tau)` with `s` Schwartz.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSuspendedElement {
    grid: TauGrid,
    poly_coeffs: Vec<CMatrix>,
    schwartz_part: Vec<CMatrix>,
    order: (i32, i32),
}

impl ProductSuspendedElement {
    pub fn new(
        grid: TauGrid,
        poly_coeffs: Vec<CMatrix>,
        schwartz_part: Vec<CMatrix>,
        order: (i32, i32),
    ) -> Result<Self, SuspendError> {
        if poly_coeffs.is_empty() {
            return Err(SuspendError::InvalidGrid("at least one polynomial coefficient is required".into()));
        }
        if schwartz_part.len() != grid.n_nodes() {
            return Err(SuspendError::LengthMismatch { expected: grid.n_nodes(), got: schwartz_part.len() });
        }
        let (minus, plus) = outer_tail(&schwartz_part, None);
        let tail = minus.max(plus);
        if tail > grid.tail_tol() {
            return Err(SuspendError::TailTolerance { tail, tol: grid.tail_tol() });
        }
        Ok(Self { grid, poly_coeffs, schwartz_part, order })
    }

    /// `C_0 + i tau` with no Schwartz part.
    pub fn hermitian_model(grid: TauGrid, c0: CMatrix) -> Self {
        let n = c0.nrows();
        let samples = vec![CMatrix::zeros(n, n); grid.n_nodes()];
        let c1 = linalg::identity(n) * crate::linalg::I;
        Self { grid, poly_coeffs: vec![c0, c1], schwartz_part: samples, order: (1, 0) }
    }

    pub fn grid(&self) -> &TauGrid {
        &self.grid
    }

    pub fn order(&self) -> (i32, i32) {
        self.order
    }

    pub fn poly_coeffs(&self) -> &[CMatrix] {
        &self.poly_coeffs
    }

    pub fn schwartz_part(&self) -> &[CMatrix] {
        &self.schwartz_part
    }

    pub fn polynomial(&self, tau: f64) -> CMatrix {
        let n = self.poly_coeffs[0].nrows();
        self.poly_coeffs.iter().rev().fold(CMatrix::zeros(n, n), |acc, c| acc * C64::new(tau, 0.0) + c)
    }

    /// Value at an arbitrary `tau`; the Schwartz part is interpolated spectrally.
    pub fn value(&self, tau: f64) -> CMatrix {
        let u = self.grid.u_of_tau(tau);
        let s = map_entries(&self.schwartz_part, |line| vec![self.grid.interpolate_flat(line, u)]);
        self.polynomial(tau) + &s[0]
    }

    pub fn node_value(&self, j: usize) -> CMatrix {
        self.polynomial(self.grid.nodes()[j]) + &self.schwartz_part[j]
    }

    /// Leading coefficient invertible, so the element is elliptic at infinity.
    pub fn is_fully_elliptic(&self) -> bool {
        let top = self.poly_coeffs.last().expect("non-empty");
        linalg::min_singular_value(top) > MARGIN_FLOOR
    }

    /// Smallest singular value over the nodes and the origin, which the
    /// midpoint grid does not contain.
    pub fn inv_margin(&self) -> f64 {
        let at_nodes = (0..self.grid.n_nodes()).map(|j| linalg::min_singular_value(&self.node_value(j)));
        let at_origin = linalg::min_singular_value(&self.value(0.0));
        at_nodes.fold(at_origin, f64::min)
    }

    pub fn is_invertible(&self) -> bool {
        self.inv_margin() > MARGIN_FLOOR
    }
}
