//! The doubly suspended star algebra truncated at first order in `eps`:
//! adiabatic traces, the trace defect, the adiabatic determinant, its
//! connection form and the curvature and gerbe identities.

mod bigrid;
mod determinant;
mod element;
mod family;
mod star;

pub use bigrid::{BiGrid, DEFAULT_BI_NODES, DEFAULT_BI_SCALE};
pub use determinant::{
    adiabatic_determinant, det_ad, line_integral, make_epsilon_path, DetConfig, EpsilonPath, PolygonPath, SphereLoop,
};
pub use element::{EpsilonClass, EpsilonElement, EpsilonElementJson, GridsJson, IndexShiftElement};
pub use family::{
    alpha_additivity_check, alpha_field, curvature_check, curving_check, delta_correction, gerbe_bfield_check,
    lift_loop_family, AdditivityCheck, EpsilonFamily, GerbeCheck, SliceJet,
};
pub use star::{
    adiabatic_trace, alpha_form, alpha_schwartz, alpha_tilde, commutator_trace, star_inverse, star_multiply,
    star_multiply_with, trace_defect, trace_of_product, Bracket,
};

use thiserror::Error;

use crate::chern::ChernError;
use crate::eta::EtaError;
use crate::opcore::OpError;
use crate::suspend::SuspendError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdiabaticError {
    #[error("incompatible inputs: {0}")]
    Mismatch(String),
    #[error("non-finite sample")]
    NonFinite,
    #[error("{what} has not decayed (tail {tail:e})")]
    Decay { what: &'static str, tail: f64 },
    #[error("element is not invertible (margin {margin:e})")]
    NotInvertible { margin: f64 },
    #[error("value at sample {point} is singular (margin {margin:e})")]
    SingularAt { point: usize, margin: f64 },
    #[error("line integral did not converge with {panels} panels")]
    Refinement { panels: usize },
    #[error("no invertible path found within the retry budget (best margin {margin:e})")]
    PathBudget { margin: f64 },
    #[error("fibre-product constraint violated (mismatch {mismatch:e})")]
    FibreProduct { mismatch: f64 },
    #[error(transparent)]
    Suspend(#[from] SuspendError),
    #[error(transparent)]
    Chern(#[from] ChernError),
    #[error(transparent)]
    Eta(#[from] EtaError),
    #[error(transparent)]
    Op(#[from] OpError),
}

#[cfg(test)]
mod tests;
