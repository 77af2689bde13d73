use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "etalab/1";

/// How a case turns its error into a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// `|lhs - rhs| <= tol`.
    Abs,
    /// `|lhs - rhs| / |rhs| <= tol`.
    Rel,
    /// `lhs` must reach `rhs`; the error is the shortfall.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub name: String,
    /// Neutral identifier of the property checked.
    pub tag: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub tol: f64,
    pub metric: Metric,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn relative(abs: f64, rhs: f64) -> f64 {
    if rhs == 0.0 {
        abs
    } else {
        abs / rhs.abs()
    }
}

impl Case {
    fn build(name: &str, tag: &str, lhs: f64, rhs: f64, tol: f64, metric: Metric) -> Self {
        let abs_err = match metric {
            Metric::AtLeast => (rhs - lhs).max(0.0),
            _ => (lhs - rhs).abs(),
        };
        let rel_err = relative((lhs - rhs).abs(), rhs);
        let err = if metric == Metric::Rel { rel_err } else { abs_err };
        let pass = err <= tol;
        Self { name: name.into(), tag: tag.into(), lhs, rhs, abs_err, rel_err, tol, metric, pass, note: None }
    }

    pub fn abs(name: &str, tag: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self::build(name, tag, lhs, rhs, tol, Metric::Abs)
    }

    pub fn rel(name: &str, tag: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self::build(name, tag, lhs, rhs, tol, Metric::Rel)
    }

    /// `err` against zero.
    pub fn bound(name: &str, tag: &str, err: f64, tol: f64) -> Self {
        Self::build(name, tag, err, 0.0, tol, Metric::Abs)
    }

    /// `value >= threshold`.
    pub fn at_least(name: &str, tag: &str, value: f64, threshold: f64) -> Self {
        Self::build(name, tag, value, threshold, 0.0, Metric::AtLeast)
    }

    /// Residuals at `h` and `h / 2`, whose ratio must reach `required`.
    pub fn refinement(name: &str, tag: &str, coarse: f64, fine: f64, required: f64) -> Self {
        let ratio = if fine > 0.0 { coarse / fine } else { f64::MAX };
        Self::at_least(name, tag, ratio, required).with_note(format!("residuals {coarse:.3e} -> {fine:.3e}"))
    }

    /// A case that could not be evaluated.
    pub fn error(name: &str, tag: &str, message: impl Into<String>) -> Self {
        Self::build(name, tag, f64::MAX, 0.0, 0.0, Metric::Abs).with_note(message)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// `err <= tol` for the case's own metric, recomputed.
    pub fn consistent(&self) -> bool {
        let err = if self.metric == Metric::Rel { self.rel_err } else { self.abs_err };
        self.pass == (err <= self.tol)
    }
}

/// A named complex value produced by `compute`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Value {
    pub name: String,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub suite: String,
    pub config: BTreeMap<String, String>,
    pub cases: Vec<Case>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<Value>,
    pub passed: bool,
    pub wall_ms: u64,
}

impl Report {
    pub fn new(suite: &str, config: BTreeMap<String, String>, cases: Vec<Case>, values: Vec<Value>, wall_ms: u64) -> Self {
        let passed = cases.iter().all(|c| c.pass);
        Self { schema: SCHEMA.into(), suite: suite.into(), config, cases, values, passed, wall_ms }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Case> {
        self.cases.iter().filter(|c| !c.pass)
    }

    /// Structural checks on a parsed report.
    pub fn validate(&self) -> Result<(), String> {
        if self.schema != SCHEMA {
            return Err(format!("schema `{}` is not `{SCHEMA}`", self.schema));
        }
        if !self.config.contains_key("seed") {
            return Err("config echo lacks the seed".into());
        }
        if let Some(c) = self.cases.iter().find(|c| !c.consistent()) {
            return Err(format!("case `{}` has a verdict inconsistent with its error", c.name));
        }
        if self.passed != self.cases.iter().all(|c| c.pass) {
            return Err("`passed` disagrees with the cases".into());
        }
        Ok(())
    }
}
