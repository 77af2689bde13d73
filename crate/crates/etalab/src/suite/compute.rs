use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{Report, RunConfig, SuiteError, Value};
use crate::adiabatic::{det_ad, DetConfig, EpsilonElement, EpsilonElementJson};
use crate::bundles::{make_invertible_perturbation_with, CircleInterpolant, OddFamily, OddFamilyJson, PerturbationConfig};
use crate::chern::{winding_number, Axis, DerivativeMode, Field, GroupFamily, ParamDomain};
use crate::eta::{family_eta, tau_invariant, RegularizedTraceConfig};
use crate::fixtures::phase_loop;
use crate::linalg::{CMatrix, C64};
use crate::opcore::MatrixData;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Winding,
    Eta0,
    Tau,
    DetAd,
}

impl FromStr for Quantity {
    type Err = SuiteError;
    fn from_str(s: &str) -> Result<Self, SuiteError> {
        match s {
            "winding" => Ok(Self::Winding),
            "eta0" => Ok(Self::Eta0),
            "tau" => Ok(Self::Tau),
            "detad" => Ok(Self::DetAd),
            _ => Err(SuiteError::UnknownQuantity(s.into())),
        }
    }
}

impl Quantity {
    fn name(self) -> &'static str {
        match self {
            Self::Winding => "winding",
            Self::Eta0 => "eta0",
            Self::Tau => "tau",
            Self::DetAd => "detad",
        }
    }
}

/// Input of `compute`, selected by its `kind` field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fixture {
    /// Samples of a loop at equally spaced points of the circle.
    Loop { samples: Vec<MatrixData> },
    /// `diag(e^{i w theta}, 1, ..., 1)` in `U(n)` over a circle of `points` points.
    StandardLoop { n: usize, w: i32, points: usize },
    OddFamily(OddFamilyJson),
    Epsilon(EpsilonElementJson),
}

impl Fixture {
    pub fn load(path: &Path) -> Result<Self, SuiteError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

fn loop_family(fixture: &Fixture) -> Result<GroupFamily, SuiteError> {
    match fixture {
        Fixture::Loop { samples } => {
            if samples.len() < 4 {
                return Err(SuiteError::Fixture(format!("a loop needs at least 4 samples, got {}", samples.len())));
            }
            let axis = Axis::circle(samples.len());
            let m = samples.iter().map(CMatrix::try_from).collect::<Result<Vec<_>, _>>()?;
            let field: Field = Arc::new(CircleInterpolant::new(&axis, m));
            Ok(GroupFamily::new(ParamDomain::circle(samples.len()), field).with_mode(DerivativeMode::Spectral))
        }
        Fixture::StandardLoop { n, w, points } => {
            if *n == 0 || *points < 4 {
                return Err(SuiteError::Fixture("standard loop needs n >= 1 and at least 4 points".into()));
            }
            Ok(GroupFamily::new(ParamDomain::circle(*points), phase_loop(*n, *w)))
        }
        _ => Err(SuiteError::Fixture("winding needs a `loop` or `standard_loop` fixture".into())),
    }
}

fn odd_family(fixture: &Fixture, cfg: &RunConfig) -> Result<OddFamily, SuiteError> {
    match fixture {
        Fixture::OddFamily(json) => Ok(OddFamily::from_json(json, cfg.tau_grid()?)?),
        _ => Err(SuiteError::Fixture("eta0 and tau need an `odd_family` fixture".into())),
    }
}

fn scalar(name: impl Into<String>, z: C64) -> Value {
    Value { name: name.into(), re: z.re, im: z.im }
}

/// One quantity from a fixture, as named complex values.
pub fn compute(quantity: Quantity, fixture: &Fixture, cfg: &RunConfig) -> Result<Report, SuiteError> {
    let start = Instant::now();
    let values = match quantity {
        Quantity::Winding => vec![scalar("winding", C64::new(winding_number(&loop_family(fixture)?)?, 0.0))],
        Quantity::Eta0 | Quantity::Tau => {
            let family = odd_family(fixture, cfg)?;
            let pcfg = PerturbationConfig { margin_floor: cfg.margin_floor, ..PerturbationConfig::default() };
            let section = make_invertible_perturbation_with(&family, family.seed() ^ cfg.seed, &pcfg)?;
            let trace = RegularizedTraceConfig::default();
            let zs = if quantity == Quantity::Eta0 {
                family_eta(&section.perturbed(), &trace)?.zero_values()
            } else {
                tau_invariant(&section.perturbed(), &trace)?
            };
            zs.into_iter().enumerate().map(|(k, z)| scalar(format!("{}[{k}]", quantity.name()), z)).collect()
        }
        Quantity::DetAd => match fixture {
            Fixture::Epsilon(json) => vec![scalar("detad", det_ad(&EpsilonElement::from_json(json)?, &DetConfig::default())?)],
            _ => return Err(SuiteError::Fixture("detad needs an `epsilon` fixture".into())),
        },
    };
    let mut echo = cfg.echo();
    echo.insert("quantity".into(), quantity.name().into());
    Ok(Report::new(quantity.name(), echo, Vec::new(), values, start.elapsed().as_millis() as u64))
}
