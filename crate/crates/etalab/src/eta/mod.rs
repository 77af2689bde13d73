//! Regularized traces, the universal eta form of half-open paths, eta forms
//! of elliptic families and the tau invariant.

mod family;
mod regularized;
mod universal;
mod value;

pub use family::{
    eta_inverse_check, eta_multiplicativity_check, family_eta, loop_perturbation, tau_invariant, EllipticFamily,
    MultiplicativityResidual,
};
pub use regularized::{
    formal_trace, formal_trace_fn, regularized_trace, regularized_trace_vec, RegularizedTraceConfig, RegularizedValue,
};
pub use universal::{fredholm_relation_check, universal_eta, universal_eta_zero};
pub use value::{EtaValue, EtaValueJson, ScalarFieldJson};

use thiserror::Error;

use crate::chern::ChernError;
use crate::suspend::SuspendError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EtaError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("fit matrix is ill-conditioned (condition {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("fit residual {residual:e} too large for a constant term of size {value:e}")]
    FitResidual { residual: f64, value: f64 },
    #[error("truncated integral to radius {radius} did not converge (error {error:e})")]
    Quadrature { radius: f64, error: f64 },
    #[error("element is not invertible (margin {margin:e})")]
    NotInvertible { margin: f64 },
    #[error("family is not invertible at point {point}, node {node} (margin {margin:e})")]
    NotInvertibleAt { point: usize, node: usize, margin: f64 },
    #[error("Schwartz remainder at point {point} has not decayed: {source}")]
    Remainder { point: usize, source: SuspendError },
    #[error(transparent)]
    Chern(#[from] ChernError),
    #[error(transparent)]
    Suspend(#[from] SuspendError),
}

#[cfg(test)]
mod tests;
