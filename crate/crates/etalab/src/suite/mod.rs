//! Verification suites and single-quantity computations behind the
//! `etalab` binary, with a plain-text configuration and JSON reports.

mod compute;
mod config;
mod criteria;
mod report;

pub use compute::{compute, Fixture, Quantity};
pub use config::RunConfig;
pub use criteria::{bundle_structure, criterion, Criterion, CRITERIA};
pub use report::{Case, Metric, Report, Value, SCHEMA};

use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::adiabatic::AdiabaticError;
use crate::bundles::BundleError;
use crate::chern::ChernError;
use crate::eta::EtaError;
use crate::opcore::OpError;
use crate::suspend::SuspendError;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("config: {0}")]
    Config(String),
    #[error("unknown suite `{0}` (expected chern, eta, adiabatic, bundles or all)")]
    UnknownSuite(String),
    #[error("unknown quantity `{0}` (expected winding, eta0, tau or detad)")]
    UnknownQuantity(String),
    #[error("fixture: {0}")]
    Fixture(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Chern(#[from] ChernError),
    #[error(transparent)]
    Eta(#[from] EtaError),
    #[error(transparent)]
    Suspend(#[from] SuspendError),
    #[error(transparent)]
    Adiabatic(#[from] AdiabaticError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Op(#[from] OpError),
}

pub const SUITES: [&str; 5] = ["chern", "eta", "adiabatic", "bundles", "all"];

/// Criterion numbers run by a suite.
pub fn suite_criteria(name: &str) -> Result<Vec<usize>, SuiteError> {
    let wanted: Vec<usize> = match name {
        "all" => CRITERIA.iter().map(|c| c.number).collect(),
        _ if SUITES.contains(&name) => CRITERIA.iter().filter(|c| c.suite == name).map(|c| c.number).collect(),
        _ => return Err(SuiteError::UnknownSuite(name.into())),
    };
    Ok(wanted)
}

/// Runs every check of suite `name`. Checks run in parallel; cases keep the
/// criterion order.
pub fn run_suite(name: &str, cfg: &RunConfig) -> Result<Report, SuiteError> {
    let start = Instant::now();
    let numbers = suite_criteria(name)?;
    let with_structure = matches!(name, "bundles" | "all");
    let mut groups: Vec<Vec<Case>> = numbers.par_iter().map(|&k| criterion(k, cfg)).collect::<Result<_, _>>()?;
    if with_structure {
        groups.push(bundle_structure(cfg));
    }
    let cases = groups.into_iter().flatten().collect();
    Ok(Report::new(name, cfg.echo(), cases, Vec::new(), start.elapsed().as_millis() as u64))
}
