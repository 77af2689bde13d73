//! Odd and even Chern characters of families over gridded parameter domains,
//! their transgressions, and winding numbers.

mod character;
mod domain;
mod family;
mod form;
mod transgression;

pub use character::{ch_even, ch_odd, odd_coefficient, odd_component, winding_number};
pub(crate) use character::{fibre_forms, odd_component_from_x};
pub use domain::{Axis, AxisKind, ParamDomain};
pub use family::{
    central_difference, constant, inverse, product, slice_last, sum, tau_only, spectral_derivative_periodic, DecayClass,
    DerivativeMode, Field, FnFamily, GroupFamily, Jets, LineJets, MatrixFamily, SuspendedFamily,
};
pub use form::{exterior_derivative, FormField, FormFieldJson};
pub use transgression::{
    delta_even_point, transgression_delta_even, transgression_delta_odd, transgression_delta_odd_twisted, PointJet,
    ROTATION_NODES,
};

use thiserror::Error;

use crate::opcore::OpError;
use crate::suspend::SuspendError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChernError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("family value at point {point} is not finite")]
    NonFinite { point: usize },
    #[error("family value at point {point} is not invertible (margin {margin:e})")]
    NotInvertible { point: usize, margin: f64 },
    #[error("analytic derivatives were requested but the family supplies none")]
    MissingDerivative,
    #[error("analytic derivative disagrees with differences at point {point}, axis {axis} (error {error:e})")]
    DerivativeMismatch { point: usize, axis: usize, error: f64 },
    #[error("degree {degree} exceeds the domain dimension {dim}")]
    DegreeTooHigh { degree: usize, dim: usize },
    #[error("suspended family fails its decay check at base point {point} (tail {tail:e})")]
    Decay { point: usize, tail: f64 },
    #[error("quadrature failed at base point {point}: {source}")]
    Quadrature { point: usize, source: SuspendError },
    #[error("{0}")]
    WrongClass(&'static str),
    #[error(transparent)]
    Op(#[from] OpError),
    #[error(transparent)]
    Suspend(#[from] SuspendError),
}

#[cfg(test)]
mod tests;
