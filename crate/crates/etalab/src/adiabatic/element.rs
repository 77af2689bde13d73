use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bigrid::BiGrid;
use super::AdiabaticError;
use crate::eta::universal_eta_zero;
use crate::fixtures::{loop_angle, phase_element};
use crate::linalg::{self, CMatrix, C64};
use crate::opcore::{MatrixData, MARGIN_FLOOR};
use crate::suspend::{SuspendedElement, TauGrid};

/// Decay class of an element of the doubly suspended algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", content = "j", rename_all = "kebab-case")]
pub enum EpsilonClass {
    /// `a0 - Id` Schwartz in `(t, tau)`.
    DoublySchwartz,
    /// `a0 -> Id` at `t = -inf`, flat to a Schwartz loop at `t = +inf`.
    HalfOpen,
    /// As `HalfOpen` but starting from `s^j` at `t = -inf`.
    DClass(i32),
}

impl EpsilonClass {
    pub fn index(self) -> i32 {
        match self {
            Self::DClass(j) => j,
            _ => 0,
        }
    }

    pub fn is_extended(self) -> bool {
        !matches!(self, Self::DoublySchwartz)
    }

    /// Class of a product.
    pub fn product(self, other: Self) -> Self {
        match (self, other) {
            (Self::DoublySchwartz, Self::DoublySchwartz) => Self::DoublySchwartz,
            (Self::DClass(_), _) | (_, Self::DClass(_)) => Self::DClass(self.index() + other.index()),
            _ => Self::HalfOpen,
        }
    }
}

/// The winding-one loop `s(tau) = Id + (e^{i theta(tau)} - 1) P` and its powers.
#[derive(Debug)]
pub struct IndexShiftElement {
    grid: TauGrid,
    n: usize,
    s: SuspendedElement,
    powers: Mutex<BTreeMap<i32, Arc<Vec<CMatrix>>>>,
}

impl IndexShiftElement {
    pub fn new(grid: TauGrid, n: usize) -> Result<Self, AdiabaticError> {
        let id = linalg::identity(n);
        let s = SuspendedElement::from_fn(grid.clone(), |tau| Self::power_at(n, 1, tau) - &id)?;
        Ok(Self { grid, n, s, powers: Mutex::new(BTreeMap::new()) })
    }

    pub fn power_at(n: usize, j: i32, tau: f64) -> CMatrix {
        phase_element(n, j as f64 * loop_angle(tau)).0
    }

    pub fn element(&self) -> &SuspendedElement {
        &self.s
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Values of `s^j` at the grid nodes.
    pub fn power(&self, j: i32) -> Arc<Vec<CMatrix>> {
        let mut cache = self.powers.lock().expect("power cache");
        cache
            .entry(j)
            .or_insert_with(|| Arc::new(self.grid.nodes().iter().map(|&tau| Self::power_at(self.n, j, tau)).collect()))
            .clone()
    }

    pub fn winding(&self) -> Result<f64, AdiabaticError> {
        Ok(universal_eta_zero(&self.s.embed())?.re)
    }
}

/// `a0 + eps a1` sampled on a [`BiGrid`], with explicit boundary slices at
/// `t = -inf` and `t = +inf`.
///
/// Group elements have `unit = Id` (the value at `tau = +-inf`); tangent
/// vectors and commutators have `unit = 0`.
#[derive(Debug, Clone)]
pub struct EpsilonElement {
    grid: BiGrid,
    class: EpsilonClass,
    a0: Vec<CMatrix>,
    a1: Vec<CMatrix>,
    minus: Vec<CMatrix>,
    plus: Vec<CMatrix>,
    unit: CMatrix,
    derivatives: OnceLock<(Vec<CMatrix>, Vec<CMatrix>)>,
}

fn max_dev<'a>(it: impl Iterator<Item = (&'a CMatrix, &'a CMatrix)>) -> f64 {
    it.map(|(a, b)| linalg::max_abs(&(a - b))).fold(0.0, f64::max)
}

impl EpsilonElement {
    pub fn new(
        grid: BiGrid,
        class: EpsilonClass,
        a0: Vec<CMatrix>,
        a1: Vec<CMatrix>,
        minus: Vec<CMatrix>,
        plus: Vec<CMatrix>,
        unit: CMatrix,
    ) -> Result<Self, AdiabaticError> {
        let n = unit.nrows();
        let shapes_ok = a0.len() == grid.len()
            && a1.len() == grid.len()
            && minus.len() == grid.n_tau()
            && plus.len() == grid.n_tau()
            && a0.iter().chain(&a1).chain(&minus).chain(&plus).all(|m| m.nrows() == n && m.ncols() == n);
        if !shapes_ok {
            return Err(AdiabaticError::Mismatch("sample counts or matrix sizes do not match the grid".into()));
        }
        if !a0.iter().chain(&a1).chain(&minus).chain(&plus).all(linalg::is_finite) {
            return Err(AdiabaticError::NonFinite);
        }
        let el = Self { grid, class, a0, a1, minus, plus, unit, derivatives: OnceLock::new() };
        el.check_decay()?;
        Ok(el)
    }

    fn check_decay(&self) -> Result<(), AdiabaticError> {
        let g = &self.grid;
        let (nt, ntau) = (g.n_t(), g.n_tau());
        let tol = g.t().tail_tol().max(g.tau().tail_tol());
        let row = |i: usize| (0..ntau).map(move |j| i * ntau + j);
        let t_tail = max_dev(row(0).map(|k| &self.a0[k]).zip(&self.minus))
            .max(max_dev(row(nt - 1).map(|k| &self.a0[k]).zip(&self.plus)));
        if t_tail > tol {
            return Err(AdiabaticError::Decay { what: "t-limits of a0", tail: t_tail });
        }
        let ends = (0..nt).flat_map(|i| [i * ntau, i * ntau + ntau - 1]);
        let tau_tail = ends
            .clone()
            .map(|k| linalg::max_abs(&(&self.a0[k] - &self.unit)))
            .chain([0, ntau - 1].iter().flat_map(|&j| [&self.minus[j], &self.plus[j]]).map(|m| linalg::max_abs(&(m - &self.unit))))
            .fold(0.0, f64::max);
        if tau_tail > tol {
            return Err(AdiabaticError::Decay { what: "tau-limits of a0", tail: tau_tail });
        }
        let eps_tail = ends
            .chain(row(0))
            .chain(row(nt - 1))
            .map(|k| linalg::max_abs(&self.a1[k]))
            .fold(0.0, f64::max);
        if eps_tail > tol {
            return Err(AdiabaticError::Decay { what: "a1", tail: eps_tail });
        }
        let flat = match self.class {
            EpsilonClass::DoublySchwartz => max_dev(self.minus.iter().chain(&self.plus).map(|m| (m, &self.unit))),
            EpsilonClass::HalfOpen => max_dev(self.minus.iter().map(|m| (m, &self.unit))),
            EpsilonClass::DClass(_) => 0.0,
        };
        if flat > tol {
            return Err(AdiabaticError::Decay { what: "boundary slices for the class", tail: flat });
        }
        Ok(())
    }

    fn boundary(grid: &BiGrid, f: impl Fn(f64) -> CMatrix) -> Vec<CMatrix> {
        grid.tau().nodes().iter().map(|&tau| f(tau)).collect()
    }

    pub fn identity(grid: BiGrid, n: usize) -> Self {
        let id = linalg::identity(n);
        Self::doubly_schwartz(grid, n, |_, _| id.clone(), |_, _| CMatrix::zeros(n, n)).expect("identity is valid")
    }

    /// Group element with `a0 - Id` and `a1` Schwartz in both variables.
    pub fn doubly_schwartz(
        grid: BiGrid,
        n: usize,
        a0: impl Fn(f64, f64) -> CMatrix,
        a1: impl Fn(f64, f64) -> CMatrix,
    ) -> Result<Self, AdiabaticError> {
        let id = linalg::identity(n);
        let slice = Self::boundary(&grid, |_| id.clone());
        Self::new(grid.clone(), EpsilonClass::DoublySchwartz, grid.sample(a0), grid.sample(a1), slice.clone(), slice, id)
    }

    /// Group element of the half-open class ending at the loop `plus`.
    pub fn half_open(
        grid: BiGrid,
        n: usize,
        a0: impl Fn(f64, f64) -> CMatrix,
        a1: impl Fn(f64, f64) -> CMatrix,
        plus: impl Fn(f64) -> CMatrix,
    ) -> Result<Self, AdiabaticError> {
        let id = linalg::identity(n);
        let minus = Self::boundary(&grid, |_| id.clone());
        let plus = Self::boundary(&grid, plus);
        Self::new(grid.clone(), EpsilonClass::HalfOpen, grid.sample(a0), grid.sample(a1), minus, plus, id)
    }

    /// Group element starting from `s^j` at `t = -inf` and ending at `plus`.
    pub fn d_class(
        grid: BiGrid,
        n: usize,
        j: i32,
        a0: impl Fn(f64, f64) -> CMatrix,
        a1: impl Fn(f64, f64) -> CMatrix,
        plus: impl Fn(f64) -> CMatrix,
    ) -> Result<Self, AdiabaticError> {
        let minus = Self::boundary(&grid, |tau| IndexShiftElement::power_at(n, j, tau));
        let plus = Self::boundary(&grid, plus);
        Self::new(grid.clone(), EpsilonClass::DClass(j), grid.sample(a0), grid.sample(a1), minus, plus, linalg::identity(n))
    }

    /// Tangent vector at a point of class `class`: all limits vanish at `tau = +-inf`.
    pub fn tangent(
        grid: BiGrid,
        class: EpsilonClass,
        d0: Vec<CMatrix>,
        d1: Vec<CMatrix>,
        minus: Vec<CMatrix>,
        plus: Vec<CMatrix>,
    ) -> Result<Self, AdiabaticError> {
        let n = d0.first().map_or(0, |m| m.nrows());
        Self::new(grid, class, d0, d1, minus, plus, CMatrix::zeros(n, n))
    }

    pub fn grid(&self) -> &BiGrid {
        &self.grid
    }

    pub fn class(&self) -> EpsilonClass {
        self.class
    }

    pub fn dim(&self) -> usize {
        self.unit.nrows()
    }

    pub fn a0(&self) -> &[CMatrix] {
        &self.a0
    }

    pub fn a1(&self) -> &[CMatrix] {
        &self.a1
    }

    pub fn minus_slice(&self) -> &[CMatrix] {
        &self.minus
    }

    /// The `t = +inf` slice, i.e. the image under restriction to infinity.
    pub fn boundary_slice(&self) -> &[CMatrix] {
        &self.plus
    }

    pub fn unit(&self) -> &CMatrix {
        &self.unit
    }

    pub fn is_tangent(&self) -> bool {
        linalg::max_abs(&self.unit) == 0.0
    }

    /// Spectral `(d/dt a0, d/dtau a0)`, computed once.
    pub fn derivatives(&self) -> (&[CMatrix], &[CMatrix]) {
        let (dt, dtau) = self.derivatives.get_or_init(|| {
            let dt = self.grid.d_t(&self.a0, &self.minus, &self.plus).expect("validated shapes");
            let dtau = self.grid.d_tau(&self.a0).expect("validated shapes");
            (dt, dtau)
        });
        (dt, dtau)
    }

    /// Smallest singular value of `a0` over the grid and both boundary slices.
    pub fn margin(&self) -> f64 {
        self.a0
            .par_iter()
            .chain(self.minus.par_iter())
            .chain(self.plus.par_iter())
            .map(linalg::min_singular_value)
            .reduce(|| f64::INFINITY, f64::min)
    }

    pub fn check_invertible(&self) -> Result<(), AdiabaticError> {
        let margin = self.margin();
        if !(margin > MARGIN_FLOOR) {
            return Err(AdiabaticError::NotInvertible { margin });
        }
        Ok(())
    }

    pub(crate) fn from_parts_unchecked(
        grid: BiGrid,
        class: EpsilonClass,
        a0: Vec<CMatrix>,
        a1: Vec<CMatrix>,
        minus: Vec<CMatrix>,
        plus: Vec<CMatrix>,
        unit: CMatrix,
    ) -> Self {
        Self { grid, class, a0, a1, minus, plus, unit, derivatives: OnceLock::new() }
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn with_derivatives(
        grid: BiGrid,
        class: EpsilonClass,
        a0: Vec<CMatrix>,
        a1: Vec<CMatrix>,
        minus: Vec<CMatrix>,
        plus: Vec<CMatrix>,
        unit: CMatrix,
        derivatives: (Vec<CMatrix>, Vec<CMatrix>),
    ) -> Self {
        let el = Self::from_parts_unchecked(grid, class, a0, a1, minus, plus, unit);
        let _ = el.derivatives.set(derivatives);
        el
    }

    fn check_compatible(&self, other: &Self) -> Result<(), AdiabaticError> {
        if self.grid != other.grid {
            return Err(AdiabaticError::Mismatch("elements live on different grids".into()));
        }
        if self.dim() != other.dim() {
            return Err(AdiabaticError::Mismatch(format!("matrix sizes {} and {}", self.dim(), other.dim())));
        }
        Ok(())
    }

    /// `self + s (other - self)`, entrywise in every component.
    pub fn lerp(&self, other: &Self, s: f64) -> Result<Self, AdiabaticError> {
        self.check_compatible(other)?;
        let mix = |x: &[CMatrix], y: &[CMatrix]| -> Vec<CMatrix> {
            x.iter().zip(y).map(|(a, b)| a + (b - a) * C64::new(s, 0.0)).collect()
        };
        let class = if s == 0.0 { self.class } else if s == 1.0 { other.class } else { self.class.lerp_class(other.class) };
        Ok(Self::from_parts_unchecked(
            self.grid.clone(),
            class,
            mix(&self.a0, &other.a0),
            mix(&self.a1, &other.a1),
            mix(&self.minus, &other.minus),
            mix(&self.plus, &other.plus),
            &self.unit + (&other.unit - &self.unit) * C64::new(s, 0.0),
        ))
    }

    /// `other - self` as a tangent vector.
    pub fn difference(&self, other: &Self) -> Result<Self, AdiabaticError> {
        self.check_compatible(other)?;
        let diff = |x: &[CMatrix], y: &[CMatrix]| -> Vec<CMatrix> { x.iter().zip(y).map(|(a, b)| b - a).collect() };
        Ok(Self::from_parts_unchecked(
            self.grid.clone(),
            self.class,
            diff(&self.a0, &other.a0),
            diff(&self.a1, &other.a1),
            diff(&self.minus, &other.minus),
            diff(&self.plus, &other.plus),
            &other.unit - &self.unit,
        ))
    }

    pub fn scaled(&self, c: f64) -> Self {
        let sc = |x: &[CMatrix]| -> Vec<CMatrix> { x.iter().map(|a| a * C64::new(c, 0.0)).collect() };
        Self::from_parts_unchecked(
            self.grid.clone(),
            self.class,
            sc(&self.a0),
            sc(&self.a1),
            sc(&self.minus),
            sc(&self.plus),
            &self.unit * C64::new(c, 0.0),
        )
    }

    /// Largest entrywise deviation from `other` over every component.
    pub fn max_difference(&self, other: &Self) -> f64 {
        let d = |x: &[CMatrix], y: &[CMatrix]| max_dev(x.iter().zip(y));
        d(&self.a0, &other.a0)
            .max(d(&self.a1, &other.a1))
            .max(d(&self.minus, &other.minus))
            .max(d(&self.plus, &other.plus))
    }

    pub fn to_json(&self) -> EpsilonElementJson {
        let m = |x: &[CMatrix]| x.iter().map(MatrixData::from).collect();
        EpsilonElementJson {
            class: self.class,
            dims: self.dim(),
            grids: GridsJson::from(&self.grid),
            a0: m(&self.a0),
            a1: m(&self.a1),
            minus_slice: m(&self.minus),
            boundary_slice: m(&self.plus),
            tangent: self.is_tangent(),
        }
    }

    pub fn from_json(json: &EpsilonElementJson) -> Result<Self, AdiabaticError> {
        let grid = json.grids.to_grid()?;
        let m = |x: &[MatrixData]| x.iter().map(CMatrix::try_from).collect::<Result<Vec<_>, _>>();
        let n = json.dims;
        let unit = if json.tangent { CMatrix::zeros(n, n) } else { linalg::identity(n) };
        Self::new(grid, json.class, m(&json.a0)?, m(&json.a1)?, m(&json.minus_slice)?, m(&json.boundary_slice)?, unit)
    }
}

impl EpsilonClass {
    fn lerp_class(self, other: Self) -> Self {
        if self == other {
            self
        } else if self.index() == other.index() {
            Self::HalfOpen
        } else {
            Self::DClass(self.index())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridsJson {
    pub t_nodes: usize,
    pub t_scale: f64,
    pub tau_nodes: usize,
    pub tau_scale: f64,
    pub tail_tol: f64,
}

impl From<&BiGrid> for GridsJson {
    fn from(g: &BiGrid) -> Self {
        Self {
            t_nodes: g.n_t(),
            t_scale: g.t().scale(),
            tau_nodes: g.n_tau(),
            tau_scale: g.tau().scale(),
            tail_tol: g.t().tail_tol(),
        }
    }
}

impl GridsJson {
    pub fn to_grid(&self) -> Result<BiGrid, AdiabaticError> {
        Ok(BiGrid::new(
            TauGrid::with_tail_tol(self.t_nodes, self.t_scale, self.tail_tol)?,
            TauGrid::with_tail_tol(self.tau_nodes, self.tau_scale, self.tail_tol)?,
        ))
    }
}

/// Fixture layout for an [`EpsilonElement`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonElementJson {
    #[serde(flatten)]
    pub class: EpsilonClass,
    pub dims: usize,
    pub grids: GridsJson,
    pub a0: Vec<MatrixData>,
    pub a1: Vec<MatrixData>,
    pub minus_slice: Vec<MatrixData>,
    pub boundary_slice: Vec<MatrixData>,
    #[serde(default)]
    pub tangent: bool,
}
