//! Invertible perturbations of odd elliptic families, their transition
//! cocycle, the action of Schwartz loops, the delooping and index sections,
//! and the degree-one index check over a circle.

mod family;
mod index;
mod section;

pub use family::{CircleInterpolant, OddFamily, OddFamilyJson, PolyJson, PolyTermJson};
pub use index::{
    basicness_residual, delooping_section, gamma_form, index_theorem_check, index_theorem_check_with, unwrapped_winding,
    DeloopingSection, IndexCheck, IndexConfig,
};
pub use section::{
    independent_section, left_action, make_invertible_perturbation, make_invertible_perturbation_with, transition,
    PerturbationConfig, PerturbationSection,
};

use thiserror::Error;

use crate::chern::ChernError;
use crate::eta::EtaError;
use crate::opcore::OpError;
use crate::suspend::SuspendError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BundleError {
    #[error("base is not Hermitian at point {point} (deviation {deviation:e})")]
    NotHermitian { point: usize, deviation: f64 },
    #[error("family is not fully elliptic beyond radius {radius} (margin {margin:e})")]
    NotElliptic { margin: f64, radius: f64 },
    #[error("no invertible perturbation after {steps} growth steps (best margin {margin:e})")]
    Budget { steps: usize, margin: f64 },
    #[error("left action lost invertibility (margin {margin:e})")]
    MarginLoss { margin: f64 },
    #[error("fibre path degenerates at point {point} (margin {margin:e})")]
    PathBudget { point: usize, margin: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error("fixture: {0}")]
    Fixture(String),
    #[error(transparent)]
    Eta(#[from] EtaError),
    #[error(transparent)]
    Chern(#[from] ChernError),
    #[error(transparent)]
    Suspend(#[from] SuspendError),
    #[error(transparent)]
    Op(#[from] OpError),
}

#[cfg(test)]
mod tests;
