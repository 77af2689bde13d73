//! Finite-rank model of smoothing operators and the group `Id + A`.

use crate::linalg::{self, CMatrix, C64};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest singular value accepted for a group element.
pub const MARGIN_FLOOR: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("Id + A is not invertible: smallest singular value {margin:e} below floor {floor:e}")]
    NotInvertible { margin: f64, floor: f64 },
    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
}

/// A smoothing operator, represented by an `N x N` complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingOp(CMatrix);

impl SmoothingOp {
    pub fn new(m: CMatrix) -> Result<Self, OpError> {
        if m.nrows() != m.ncols() {
            return Err(OpError::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        if !linalg::is_finite(&m) {
            return Err(OpError::NonFinite);
        }
        Ok(Self(m))
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

/// An element `Id + A` of the smoothing group, with its invertibility margin.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    perturbation: SmoothingOp,
    inv_margin: f64,
}

impl GroupElement {
    pub fn new(a: SmoothingOp) -> Result<Self, OpError> {
        Self::with_floor(a, MARGIN_FLOOR)
    }

    pub fn with_floor(a: SmoothingOp, floor: f64) -> Result<Self, OpError> {
        let value = linalg::identity(a.dim()) + a.matrix();
        let margin = linalg::min_singular_value(&value);
        if !(margin > floor) {
            return Err(OpError::NotInvertible { margin, floor });
        }
        Ok(Self { perturbation: a, inv_margin: margin })
    }

    /// Builds the element whose full value is `m` (so `A = m - Id`).
    pub fn from_value(m: CMatrix) -> Result<Self, OpError> {
        let n = m.nrows();
        Self::new(SmoothingOp::new(m - linalg::identity(n))?)
    }

    pub fn identity(n: usize) -> Self {
        Self { perturbation: SmoothingOp::zeros(n), inv_margin: 1.0 }
    }

    pub fn dim(&self) -> usize {
        self.perturbation.dim()
    }

    pub fn perturbation(&self) -> &SmoothingOp {
        &self.perturbation
    }

    pub fn inv_margin(&self) -> f64 {
        self.inv_margin
    }

    /// The full matrix `Id + A`.
    pub fn value(&self) -> CMatrix {
        linalg::identity(self.dim()) + self.perturbation.matrix()
    }
}

/// `(Id + A)(Id + B) = Id + (A + B + AB)`.
pub fn compose(a: &GroupElement, b: &GroupElement) -> Result<GroupElement, OpError> {
    if a.dim() != b.dim() {
        return Err(OpError::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    let (pa, pb) = (a.perturbation.matrix(), b.perturbation.matrix());
    let sum = pa + pb + pa * pb;
    GroupElement::new(SmoothingOp::new(sum)?)
}

pub fn group_inverse(a: &GroupElement) -> Result<GroupElement, OpError> {
    let inv = linalg::inverse(&a.value()).ok_or(OpError::NotInvertible { margin: 0.0, floor: MARGIN_FLOOR })?;
    GroupElement::from_value(inv)
}

/// `det(Id + A)`.
pub fn fredholm_det(a: &GroupElement) -> C64 {
    linalg::determinant(&a.value())
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_spectrum(h: &CMatrix) -> Result<Vec<f64>, OpError> {
    if h.nrows() != h.ncols() {
        return Err(OpError::NotSquare { rows: h.nrows(), cols: h.ncols() });
    }
    let scale = 1.0 + linalg::max_abs(h);
    let deviation = linalg::hermitian_deviation(h);
    if deviation > 1e-12 * scale {
        return Err(OpError::NotHermitian { deviation });
    }
    Ok(linalg::hermitian_eigen(h).0)
}

/// Serializable matrix layout: row-major `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixData {
    pub n: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMatrix> for MatrixData {
    fn from(m: &CMatrix) -> Self {
        let n = m.nrows();
        let data = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| [m[(i, j)].re, m[(i, j)].im]).collect();
        Self { n, data }
    }
}

impl TryFrom<&MatrixData> for CMatrix {
    type Error = OpError;

    fn try_from(d: &MatrixData) -> Result<Self, OpError> {
        if d.data.len() != d.n * d.n {
            return Err(OpError::DimensionMismatch { left: d.data.len(), right: d.n * d.n });
        }
        let m = CMatrix::from_fn(d.n, d.n, |i, j| {
            let [re, im] = d.data[i * d.n + j];
            C64::new(re, im)
        });
        if !linalg::is_finite(&m) {
            return Err(OpError::NonFinite);
        }
        Ok(m)
    }
}
