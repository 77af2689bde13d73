use rand::Rng;

use super::bigrid::BiGrid;
use super::element::EpsilonElement;
use super::star::alpha_form;
use super::AdiabaticError;
use crate::fixtures::{case_rng, random_matrix};
use crate::linalg::{self, gauss_legendre, CMatrix, C64, I};

/// A smooth path `s -> gamma(s)`, `s` in `[0, 1]`, in the star group.
pub trait EpsilonPath: Sync {
    fn point(&self, s: f64) -> Result<EpsilonElement, AdiabaticError>;
    fn tangent(&self, s: f64) -> Result<EpsilonElement, AdiabaticError>;
    /// Parameters where the path may fail to be smooth.
    fn breakpoints(&self) -> Vec<f64> {
        vec![0.0, 1.0]
    }
}

/// Piecewise linear path through the given vertices, uniformly parametrized.
#[derive(Debug, Clone)]
pub struct PolygonPath {
    vertices: Vec<EpsilonElement>,
}

impl PolygonPath {
    pub fn new(vertices: Vec<EpsilonElement>) -> Result<Self, AdiabaticError> {
        if vertices.len() < 2 {
            return Err(AdiabaticError::Mismatch("a path needs at least two vertices".into()));
        }
        Ok(Self { vertices })
    }

    pub fn straight(from: EpsilonElement, to: EpsilonElement) -> Self {
        Self { vertices: vec![from, to] }
    }

    pub fn vertices(&self) -> &[EpsilonElement] {
        &self.vertices
    }

    /// This path followed by `other`, which must start where this one ends.
    pub fn then(&self, other: &Self) -> Result<Self, AdiabaticError> {
        let gap = self.vertices.last().expect("non-empty").max_difference(&other.vertices[0]);
        if gap > 1e-12 {
            return Err(AdiabaticError::Mismatch(format!("paths do not meet (gap {gap:e})")));
        }
        let mut vertices = self.vertices.clone();
        vertices.extend(other.vertices[1..].iter().cloned());
        Ok(Self { vertices })
    }

    pub fn reversed(&self) -> Self {
        Self { vertices: self.vertices.iter().rev().cloned().collect() }
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let m = self.vertices.len() - 1;
        let x = s.clamp(0.0, 1.0) * m as f64;
        let k = (x.floor() as usize).min(m - 1);
        (k, x - k as f64)
    }
}

impl EpsilonPath for PolygonPath {
    fn point(&self, s: f64) -> Result<EpsilonElement, AdiabaticError> {
        let (k, u) = self.locate(s);
        self.vertices[k].lerp(&self.vertices[k + 1], u)
    }

    fn tangent(&self, s: f64) -> Result<EpsilonElement, AdiabaticError> {
        let (k, _) = self.locate(s);
        let m = (self.vertices.len() - 1) as f64;
        Ok(self.vertices[k].difference(&self.vertices[k + 1])?.scaled(m))
    }

    fn breakpoints(&self) -> Vec<f64> {
        let m = self.vertices.len() - 1;
        (0..=m).map(|k| k as f64 / m as f64).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DetConfig {
    /// Gauss-Legendre nodes per panel.
    pub nodes: usize,
    /// Panels per smooth piece in the first pass.
    pub panels: usize,
    pub max_doublings: usize,
    /// Convergence threshold on the line integral.
    pub tol: f64,
    /// Smallest singular value tolerated along a straight segment.
    pub min_margin: f64,
    pub retries: usize,
    pub seed: u64,
}

impl Default for DetConfig {
    fn default() -> Self {
        Self { nodes: 8, panels: 2, max_doublings: 6, tol: 1e-8, min_margin: 1e-2, retries: 8, seed: 0x5eed }
    }
}

fn composite(path: &dyn EpsilonPath, a: f64, b: f64, panels: usize, nodes: &[(f64, f64)]) -> Result<C64, AdiabaticError> {
    let h = (b - a) / panels as f64;
    let mut total = C64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for &(x, w) in nodes {
            let s = lo + 0.5 * h * (x + 1.0);
            let g = path.point(s)?;
            let v = alpha_form(&g, &[path.tangent(s)?])?;
            total += v[0] * (0.5 * h * w);
        }
    }
    Ok(total)
}

/// `int_0^1 gamma^* alpha`, refined by panel doubling on each smooth piece
/// until successive values differ by less than `cfg.tol`.
pub fn line_integral(path: &dyn EpsilonPath, cfg: &DetConfig) -> Result<C64, AdiabaticError> {
    let nodes = gauss_legendre(cfg.nodes, -1.0, 1.0);
    let bps = path.breakpoints();
    let mut total = C64::new(0.0, 0.0);
    for w in bps.windows(2) {
        let mut panels = cfg.panels.max(1);
        let mut prev = composite(path, w[0], w[1], panels, &nodes)?;
        let mut done = false;
        for _ in 0..cfg.max_doublings {
            panels *= 2;
            let next = composite(path, w[0], w[1], panels, &nodes)?;
            let change = (next - prev).norm();
            prev = next;
            if change < cfg.tol / bps.len() as f64 {
                done = true;
                break;
            }
        }
        if !done {
            return Err(AdiabaticError::Refinement { panels });
        }
        total += prev;
    }
    Ok(total)
}

/// `exp(int gamma^* alpha)` along `path`.
pub fn adiabatic_determinant(path: &dyn EpsilonPath, cfg: &DetConfig) -> Result<C64, AdiabaticError> {
    Ok(line_integral(path, cfg)?.exp())
}

fn segment_margin(a: &EpsilonElement, b: &EpsilonElement) -> Result<f64, AdiabaticError> {
    let mut worst = f64::INFINITY;
    for k in 0..=16 {
        worst = worst.min(a.lerp(b, k as f64 / 16.0)?.margin());
    }
    Ok(worst)
}

/// Straight segment from `from` to `to`, or a broken one through a randomly
/// perturbed midpoint when the segment comes too close to a singular value.
pub fn make_epsilon_path(from: &EpsilonElement, to: &EpsilonElement, cfg: &DetConfig) -> Result<PolygonPath, AdiabaticError> {
    let direct = segment_margin(from, to)?;
    if direct > cfg.min_margin {
        return Ok(PolygonPath::straight(from.clone(), to.clone()));
    }
    let mut rng = case_rng(cfg.seed, "epsilon-path");
    let mut best = direct;
    let grid = from.grid().clone();
    let n = from.dim();
    for _ in 0..cfg.retries {
        let amp = rng.random_range(0.5..1.5);
        let r = random_matrix(&mut rng, n, amp);
        let c = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let bump = EpsilonElement::tangent(
            grid.clone(),
            from.class(),
            grid.sample(|t, tau| &r * C64::new((-(t - c.0).powi(2) - (tau - c.1).powi(2)).exp(), 0.0)),
            vec![CMatrix::zeros(n, n); grid.len()],
            vec![CMatrix::zeros(n, n); grid.n_tau()],
            vec![CMatrix::zeros(n, n); grid.n_tau()],
        )?;
        let mid = add(&from.lerp(to, 0.5)?, &bump)?;
        let margin = segment_margin(from, &mid)?.min(segment_margin(&mid, to)?);
        if margin > cfg.min_margin {
            return PolygonPath::new(vec![from.clone(), mid, to.clone()]);
        }
        best = best.max(margin);
    }
    Err(AdiabaticError::PathBudget { margin: best })
}

fn add(a: &EpsilonElement, d: &EpsilonElement) -> Result<EpsilonElement, AdiabaticError> {
    let sum = |x: &[CMatrix], y: &[CMatrix]| -> Vec<CMatrix> { x.iter().zip(y).map(|(p, q)| p + q).collect() };
    EpsilonElement::new(
        a.grid().clone(),
        a.class(),
        sum(a.a0(), d.a0()),
        sum(a.a1(), d.a1()),
        sum(a.minus_slice(), d.minus_slice()),
        sum(a.boundary_slice(), d.boundary_slice()),
        a.unit() + d.unit(),
    )
}

/// `det_ad(g)` along the default path from the identity.
pub fn det_ad(g: &EpsilonElement, cfg: &DetConfig) -> Result<C64, AdiabaticError> {
    let id = EpsilonElement::identity(g.grid().clone(), g.dim());
    adiabatic_determinant(&make_epsilon_path(&id, g, cfg)?, cfg)
}

/// Loop through a degree-one map `R^3 -> SU(2)` trivial at infinity: the
/// first coordinate runs over `R` as `s` runs over `[0, 1]`, the other two
/// are `(t, tau)`.
#[derive(Debug, Clone)]
pub struct SphereLoop {
    grid: BiGrid,
    /// Scale of the map `s -> c tan(pi (s - 1/2))`.
    pub stretch: f64,
    /// Winding direction, `1` or `-1`.
    pub orientation: f64,
}

impl SphereLoop {
    pub fn new(grid: BiGrid, stretch: f64, orientation: f64) -> Self {
        Self { grid, stretch, orientation }
    }

    fn coordinate(&self, s: f64) -> (f64, f64) {
        let u = std::f64::consts::PI * (s - 0.5);
        let c = u.cos();
        (self.stretch * u.tan(), self.stretch * std::f64::consts::PI / (c * c))
    }

    /// `-exp(i theta(r) y.sigma / r)` with `theta = pi tanh r`, and its `y_0`-partial.
    fn value(&self, y: [f64; 3]) -> (CMatrix, CMatrix) {
        let y = [y[0], self.orientation * y[1], y[2]];
        let r = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt().max(1e-300);
        let th = std::f64::consts::PI * r.tanh();
        let dth = std::f64::consts::PI / r.cosh().powi(2);
        let (sn, cs) = th.sin_cos();
        let f = sn / r;
        let df = (cs * dth * r - sn) / (r * r);
        let pauli = |v: [C64; 3]| {
            CMatrix::from_row_slice(2, 2, &[v[2], v[0] - I * v[1], v[0] + I * v[1], -v[2]])
        };
        let ydot = pauli([C64::new(y[0], 0.0), C64::new(y[1], 0.0), C64::new(y[2], 0.0)]);
        let sigma0 = pauli([C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        let id = linalg::identity(2);
        let g = -(&id * C64::new(cs, 0.0) + &ydot * (I * f));
        let dr = y[0] / r;
        let dg = -(&id * C64::new(-sn * dth * dr, 0.0) + &ydot * (I * df * dr) + &sigma0 * (I * f));
        (g, dg)
    }
}

impl EpsilonPath for SphereLoop {
    fn point(&self, s: f64) -> Result<EpsilonElement, AdiabaticError> {
        let (y0, _) = self.coordinate(s);
        if !y0.is_finite() {
            return Ok(EpsilonElement::identity(self.grid.clone(), 2));
        }
        EpsilonElement::doubly_schwartz(self.grid.clone(), 2, |t, tau| self.value([y0, t, tau]).0, |_, _| CMatrix::zeros(2, 2))
    }

    fn tangent(&self, s: f64) -> Result<EpsilonElement, AdiabaticError> {
        let (y0, dy0) = self.coordinate(s);
        let g = &self.grid;
        let zero = CMatrix::zeros(2, 2);
        let d0 = if y0.is_finite() {
            g.sample(|t, tau| self.value([y0, t, tau]).1 * C64::new(dy0, 0.0))
        } else {
            vec![zero.clone(); g.len()]
        };
        EpsilonElement::tangent(
            g.clone(),
            super::EpsilonClass::DoublySchwartz,
            d0,
            vec![zero.clone(); g.len()],
            vec![zero.clone(); g.n_tau()],
            vec![zero; g.n_tau()],
        )
    }
}
