use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::BundleError;
use crate::chern::{product, Axis, Field, FnFamily, MatrixFamily, ParamDomain};
use crate::eta::EllipticFamily;
use crate::linalg::{self, CMatrix, C64};
use crate::opcore::{MatrixData, MARGIN_FLOOR};
use crate::suspend::TauGrid;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

/// A fully elliptic odd family `a(y, tau)` over a gridded base.
///
/// The Hermitian branch is `s(y, tau) (A(y) + i tau)` with `A = A^*` and an
/// optional twist `s` by Schwartz loops; the general branch wraps any
/// [`EllipticFamily`].
#[derive(Clone)]
pub struct OddFamily {
    id: u64,
    base: Option<Field>,
    twist: Option<Field>,
    elliptic: EllipticFamily,
    witness: f64,
    seed: u64,
}

impl std::fmt::Debug for OddFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OddFamily")
            .field("domain", self.domain())
            .field("hermitian", &self.is_hermitian())
            .field("twisted", &self.twist.is_some())
            .field("witness", &self.witness)
            .finish()
    }
}

/// Smallest singular value of `a(y, tau)` over grid nodes with `|tau| >= radius`.
fn ellipticity_margin(e: &EllipticFamily) -> f64 {
    let taus: Vec<f64> = e.grid().nodes().iter().copied().filter(|t| t.abs() >= e.radius()).collect();
    (0..e.domain().len())
        .into_par_iter()
        .map(|p| {
            let y = e.domain().point(p);
            taus.iter().map(|&t| linalg::min_singular_value(&e.value(&y, t))).fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min)
}

impl OddFamily {
    /// `A(y) + i tau` for a Hermitian base family.
    pub fn hermitian(domain: ParamDomain, grid: TauGrid, base: Field) -> Result<Self, BundleError> {
        for (point, y) in domain.points().enumerate() {
            let a = base.value(&y);
            let deviation = linalg::hermitian_deviation(&a);
            if deviation > 1e-12 * (1.0 + linalg::max_abs(&a)) {
                return Err(BundleError::NotHermitian { point, deviation });
            }
        }
        let elliptic = EllipticFamily::linear(domain, grid, base.clone());
        Self::build(Some(base), None, elliptic)
    }

    /// A general fully elliptic family; perturbations are not constructed for it.
    pub fn general(elliptic: EllipticFamily) -> Result<Self, BundleError> {
        Self::build(None, None, elliptic)
    }

    fn build(base: Option<Field>, twist: Option<Field>, elliptic: EllipticFamily) -> Result<Self, BundleError> {
        let witness = ellipticity_margin(&elliptic);
        if !(witness > MARGIN_FLOOR) {
            return Err(BundleError::NotElliptic { margin: witness, radius: elliptic.radius() });
        }
        Ok(Self { id: fresh_id(), base, twist, elliptic, witness, seed: 0 })
    }

    /// `s a` for a family of Schwartz loops `s(y, tau)`.
    pub fn twisted(&self, s: Field) -> Result<Self, BundleError> {
        let twist = match &self.twist {
            Some(t) => product(s.clone(), t.clone()),
            None => s.clone(),
        };
        Self::build(self.base.clone(), Some(twist), self.elliptic.left_multiply(s)).map(|f| f.with_seed(self.seed))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn domain(&self) -> &ParamDomain {
        self.elliptic.domain()
    }

    pub fn grid(&self) -> &TauGrid {
        self.elliptic.grid()
    }

    pub fn size(&self) -> usize {
        self.elliptic.size()
    }

    pub fn is_hermitian(&self) -> bool {
        self.base.is_some()
    }

    /// `A(y)`, on the Hermitian branch.
    pub fn base(&self) -> Option<&Field> {
        self.base.as_ref()
    }

    pub fn twist(&self) -> Option<&Field> {
        self.twist.as_ref()
    }

    pub fn elliptic(&self) -> &EllipticFamily {
        &self.elliptic
    }

    /// Smallest singular value over the nodes with `|tau|` beyond the model radius.
    pub fn witness(&self) -> f64 {
        self.witness
    }

    pub fn radius(&self) -> f64 {
        self.elliptic.radius()
    }

    pub fn value(&self, y: &[f64], tau: f64) -> CMatrix {
        self.elliptic.value(y, tau)
    }

    pub fn from_json(json: &OddFamilyJson, grid: TauGrid) -> Result<Self, BundleError> {
        let domain = ParamDomain::new(json.axes.clone())?;
        let matrix = |d: &MatrixData| -> Result<CMatrix, BundleError> {
            let m = CMatrix::try_from(d).map_err(|e| BundleError::Fixture(e.to_string()))?;
            if m.nrows() != json.n {
                return Err(BundleError::Fixture(format!("block of size {} in a rank-{} family", m.nrows(), json.n)));
            }
            Ok(m)
        };
        let base: Field = match (&json.blocks, &json.poly) {
            (Some(blocks), None) => {
                if domain.dim() != 1 || !domain.axis(0).is_periodic() {
                    return Err(BundleError::Fixture("per-gridpoint blocks need a single periodic axis".into()));
                }
                if blocks.len() != domain.len() {
                    return Err(BundleError::Fixture(format!("{} blocks for {} grid points", blocks.len(), domain.len())));
                }
                let samples = blocks.iter().map(matrix).collect::<Result<Vec<_>, _>>()?;
                Arc::new(CircleInterpolant::new(domain.axis(0), samples))
            }
            (None, Some(poly)) => {
                let constant = matrix(&poly.constant)?;
                let terms = poly
                    .terms
                    .iter()
                    .map(|t| {
                        if t.k.len() != domain.dim() {
                            return Err(BundleError::Fixture("wave vector length differs from the base dimension".into()));
                        }
                        Ok((t.k.clone(), matrix(&t.cos)?, matrix(&t.sin)?))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let series = crate::fixtures::TrigSeries { constant, terms };
                let s2 = series.clone();
                FnFamily::new(json.n, move |y: &[f64]| series.eval(y)).with_partials(move |y: &[f64], k| s2.partial(y, k)).into_field()
            }
            _ => return Err(BundleError::Fixture("exactly one of `blocks` and `poly` is required".into())),
        };
        Ok(Self::hermitian(domain, grid, base)?.with_seed(json.seed))
    }
}

/// `{N, axes, blocks | poly, seed}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddFamilyJson {
    #[serde(rename = "N")]
    pub n: usize,
    pub axes: Vec<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<MatrixData>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly: Option<PolyJson>,
    #[serde(default)]
    pub seed: u64,
}

/// `C + sum (cos(k.y) A_k + sin(k.y) B_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyJson {
    pub constant: MatrixData,
    #[serde(default)]
    pub terms: Vec<PolyTermJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTermJson {
    pub k: Vec<f64>,
    pub cos: MatrixData,
    pub sin: MatrixData,
}

/// Trigonometric interpolant of samples on a periodic axis.
pub struct CircleInterpolant {
    start: f64,
    /// `2 pi / period`.
    rate: f64,
    n: usize,
    /// `(k, c_k)` for `|k| < n / 2`.
    modes: Vec<(f64, CMatrix)>,
    /// Coefficient of `cos(n x / 2)` for even sample counts.
    nyquist: Option<CMatrix>,
}

impl CircleInterpolant {
    pub fn new(axis: &Axis, samples: Vec<CMatrix>) -> Self {
        let n = samples.len();
        let dim = samples[0].nrows();
        let coeff = |k: i64| {
            samples.iter().enumerate().fold(CMatrix::zeros(dim, dim), |acc, (j, s)| {
                let phase = -2.0 * PI * (k * j as i64) as f64 / n as f64;
                acc + s * C64::from_polar(1.0 / n as f64, phase)
            })
        };
        let half = ((n - 1) / 2) as i64;
        let modes = (-half..=half).map(|k| (k as f64, coeff(k))).collect();
        let nyquist = (n % 2 == 0).then(|| coeff(n as i64 / 2));
        Self { start: axis.start, rate: 2.0 * PI / (axis.end - axis.start), n, modes, nyquist }
    }

    fn phase(&self, y: f64) -> f64 {
        self.rate * (y - self.start)
    }
}

impl MatrixFamily for CircleInterpolant {
    fn size(&self) -> usize {
        self.modes[0].1.nrows()
    }
    fn value(&self, x: &[f64]) -> CMatrix {
        let t = self.phase(x[0]);
        let mut out = self.modes.iter().fold(CMatrix::zeros(self.size(), self.size()), |acc, (k, c)| acc + c * C64::from_polar(1.0, k * t));
        if let Some(c) = &self.nyquist {
            out += c * C64::new((0.5 * self.n as f64 * t).cos(), 0.0);
        }
        out
    }
    fn partial(&self, x: &[f64], _axis: usize) -> Option<CMatrix> {
        let t = self.phase(x[0]);
        let mut out = self
            .modes
            .iter()
            .fold(CMatrix::zeros(self.size(), self.size()), |acc, (k, c)| acc + c * (C64::from_polar(1.0, k * t) * C64::new(0.0, k * self.rate)));
        if let Some(c) = &self.nyquist {
            let m = 0.5 * self.n as f64;
            out -= c * C64::new(m * self.rate * (m * t).sin(), 0.0);
        }
        Some(out)
    }
    fn has_partials(&self) -> bool {
        true
    }
}
