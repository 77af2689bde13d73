use std::collections::BTreeMap;
use std::path::PathBuf;

use super::SuiteError;
use crate::adiabatic::{BiGrid, Bracket, DEFAULT_BI_NODES, DEFAULT_BI_SCALE};
use crate::suspend::{TauGrid, DEFAULT_NODES, DEFAULT_SCALE, DEFAULT_TAIL_TOL};

/// Base resolutions, before `grid_scale` is applied.
const RESOLUTIONS: [(&str, usize); 11] = [
    ("winding", 256),
    ("closedness", 16),
    ("closedness3", 8),
    ("closedness_even", 10),
    ("transgression", 16),
    ("eta", 6),
    ("curvature", 8),
    ("gerbe", 10),
    ("curving", 12),
    ("index", 12),
    ("bundles", 8),
];

/// Settings shared by every suite; read from `key = value` text.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Largest matrix size of random fixtures.
    pub n: usize,
    pub n_nodes: usize,
    /// `L` in `tau = L tan(theta)`.
    pub scale: f64,
    pub tail_tol: f64,
    pub margin_floor: f64,
    pub bi_nodes: usize,
    pub seed: u64,
    /// Multiplies every resolution.
    pub grid_scale: f64,
    /// Random instances per sampled property.
    pub samples: usize,
    pub bracket: Bracket,
    pub out: Option<PathBuf>,
    pub resolutions: BTreeMap<String, usize>,
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 8,
            n_nodes: DEFAULT_NODES,
            scale: DEFAULT_SCALE,
            tail_tol: DEFAULT_TAIL_TOL,
            margin_floor: 1e-3,
            bi_nodes: DEFAULT_BI_NODES,
            seed: 0,
            grid_scale: 1.0,
            samples: 20,
            bracket: Bracket::Td9,
            out: None,
            resolutions: RESOLUTIONS.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            tolerances: BTreeMap::new(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, SuiteError> {
    value.parse().map_err(|_| SuiteError::Config(format!("bad value `{value}` for `{key}`")))
}

fn positive(key: &str, v: f64) -> Result<f64, SuiteError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(SuiteError::Config(format!("`{key}` must be positive, got {v}")))
    }
}

impl RunConfig {
    /// Defaults overridden by the `key = value` lines of `text`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, SuiteError> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| SuiteError::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SuiteError> {
        match key {
            "N" | "n" => self.n = parse(key, value)?,
            "n_nodes" => self.n_nodes = parse(key, value)?,
            "L" => self.scale = positive(key, parse(key, value)?)?,
            "tail_tol" => self.tail_tol = positive(key, parse(key, value)?)?,
            "margin_floor" => self.margin_floor = positive(key, parse(key, value)?)?,
            "bi_nodes" => self.bi_nodes = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "grid_scale" => self.grid_scale = positive(key, parse(key, value)?)?,
            "samples" => self.samples = parse(key, value)?,
            "bracket" => self.bracket = value.parse().map_err(SuiteError::Config)?,
            "out" => self.out = Some(PathBuf::from(value)),
            _ => {
                if let Some(name) = key.strip_prefix("res.") {
                    if !self.resolutions.contains_key(name) {
                        return Err(SuiteError::Config(format!("unknown resolution `{name}`")));
                    }
                    self.resolutions.insert(name.to_string(), parse(key, value)?);
                } else if let Some(name) = key.strip_prefix("tol.") {
                    self.tolerances.insert(name.to_string(), positive(key, parse(key, value)?)?);
                } else {
                    return Err(SuiteError::Config(format!("unknown key `{key}`")));
                }
            }
        }
        if self.n == 0 || self.n_nodes < 8 || self.bi_nodes < 8 || self.samples == 0 {
            return Err(SuiteError::Config("sizes must be positive and grids at least 8 nodes".into()));
        }
        Ok(())
    }

    /// Resolution `name` times `grid_scale`, at least 2.
    pub fn resolution(&self, name: &str) -> usize {
        let base = self.resolutions.get(name).copied().unwrap_or(8);
        ((base as f64 * self.grid_scale).round() as usize).max(2)
    }

    /// Tolerance for a case, honouring `tol.<case>` overrides.
    pub fn tolerance(&self, case: &str, default: f64) -> f64 {
        self.tolerances.get(case).copied().unwrap_or(default)
    }

    pub fn tau_grid(&self) -> Result<TauGrid, SuiteError> {
        Ok(TauGrid::with_tail_tol(self.n_nodes, self.scale, self.tail_tol)?)
    }

    pub fn bi_grid(&self) -> Result<BiGrid, SuiteError> {
        let g = TauGrid::with_tail_tol(self.bi_nodes, DEFAULT_BI_SCALE, self.tail_tol)?;
        Ok(BiGrid::new(g.clone(), g))
    }

    /// Every setting as text, for the report.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("N".into(), self.n.to_string());
        m.insert("n_nodes".into(), self.n_nodes.to_string());
        m.insert("L".into(), self.scale.to_string());
        m.insert("tail_tol".into(), self.tail_tol.to_string());
        m.insert("margin_floor".into(), self.margin_floor.to_string());
        m.insert("bi_nodes".into(), self.bi_nodes.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("grid_scale".into(), self.grid_scale.to_string());
        m.insert("samples".into(), self.samples.to_string());
        m.insert("bracket".into(), self.bracket.to_string());
        if let Some(out) = &self.out {
            m.insert("out".into(), out.display().to_string());
        }
        for (k, v) in &self.resolutions {
            m.insert(format!("res.{k}"), v.to_string());
        }
        for (k, v) in &self.tolerances {
            m.insert(format!("tol.{k}"), v.to_string());
        }
        m
    }
}
