//! Suspended groups: compactified tau-grids, decay-classed elements and the
//! delooping maps between loops, paths and the base group.

mod elements;
mod grid;

pub use elements::{HalfOpenElement, ProductSuspendedElement, SuspendedElement};
pub use grid::{map_entries, ramp, ramp_derivative, TauGrid, DEFAULT_NODES, DEFAULT_SCALE, DEFAULT_TAIL_TOL};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg::{self, CMatrix, C64};
use crate::opcore::{GroupElement, OpError, SmoothingOp};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SuspendError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite sample at node {node}")]
    NonFinite { node: usize },
    #[error("sample at node {node} is not invertible (margin {margin:e})")]
    NotInvertible { node: usize, margin: f64 },
    #[error("tail magnitude {tail:e} exceeds tolerance {tol:e}")]
    TailTolerance { tail: f64, tol: f64 },
    #[error("no invertible path found within the retry budget; worst margin {margin:e} at r = {r}")]
    PathBudgetExhausted { r: f64, margin: f64 },
    #[error("homotopy parameter {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error(transparent)]
    Op(#[from] OpError),
}

/// Restriction to `tau = +inf`.
pub fn restrict_infinity(a: &HalfOpenElement) -> GroupElement {
    a.limit().clone()
}

#[derive(Debug, Clone, Copy)]
pub struct PathOptions {
    /// Smallest singular value tolerated along the path.
    pub min_margin: f64,
    /// Number of auxiliary elements tried when the straight segment fails.
    pub retries: usize,
    pub seed: u64,
    /// Half the separation of the two ramps of a broken path.
    pub break_offset: f64,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self { min_margin: 1e-2, retries: 8, seed: 0x5eed, break_offset: 3.0 }
    }
}

fn segment_margin(a: &CMatrix, b: &CMatrix, samples: usize) -> (f64, f64) {
    (0..=samples)
        .map(|k| {
            let r = k as f64 / samples as f64;
            (r, linalg::min_singular_value(&(a + (b - a) * C64::new(r, 0.0))))
        })
        .fold((0.0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

/// A flat-ended path from `Id` to `g`, straight when possible.
pub fn make_path(g: &GroupElement, grid: &TauGrid, options: PathOptions) -> Result<HalfOpenElement, SuspendError> {
    let n = g.dim();
    let id = linalg::identity(n);
    let target = g.value();
    let (r_min, margin) = segment_margin(&id, &target, 512);
    if margin > options.min_margin {
        let step = g.perturbation().matrix().clone();
        return HalfOpenElement::from_fn(grid.clone(), g.clone(), |t| &step * C64::new(ramp(t), 0.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let spread = 0.5 * (1.0 + linalg::max_abs(g.perturbation().matrix()));
    let mut worst = (r_min, margin);
    for _ in 0..options.retries {
        let noise = CMatrix::from_fn(n, n, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im) * (spread / (n as f64).sqrt())
        });
        let mid = (&id + &target) * C64::new(0.5, 0.0) + noise;
        let (r1, m1) = segment_margin(&id, &mid, 512);
        let (r2, m2) = segment_margin(&mid, &target, 512);
        if m1.min(m2) > options.min_margin {
            let c = options.break_offset;
            let first = &mid - &id;
            let second = &target - &mid;
            let path = HalfOpenElement::from_fn(grid.clone(), g.clone(), |t| {
                &first * C64::new(ramp(t + c), 0.0) + &second * C64::new(ramp(t - c), 0.0)
            })?;
            let dense = grid.with_nodes(4 * grid.n_nodes())?;
            let sampled_margin = dense
                .nodes()
                .iter()
                .map(|&t| {
                    let v = &id + &first * C64::new(ramp(t + c), 0.0) + &second * C64::new(ramp(t - c), 0.0);
                    linalg::min_singular_value(&v)
                })
                .fold(f64::INFINITY, f64::min);
            if sampled_margin > options.min_margin {
                return Ok(path);
            }
        }
        let local = if m1 < m2 { (0.5 * r1, m1) } else { (0.5 + 0.5 * r2, m2) };
        if local.1 > worst.1 {
            worst = local;
        }
    }
    Err(SuspendError::PathBudgetExhausted { r: worst.0, margin: worst.1 })
}

/// `A(tau) = int_{-inf}^tau d`, returned as a path ending at `Id + A(+inf)`.
pub fn reconstruct_from_derivative(grid: &TauGrid, d: &[CMatrix]) -> Result<HalfOpenElement, SuspendError> {
    if d.len() != grid.n_nodes() {
        return Err(SuspendError::LengthMismatch { expected: grid.n_nodes(), got: d.len() });
    }
    let k = d.len();
    let tail = [&d[0], &d[1], &d[k - 2], &d[k - 1]].iter().map(|m| linalg::max_abs(m)).fold(0.0, f64::max);
    if tail > grid.tail_tol() {
        return Err(SuspendError::TailTolerance { tail, tol: grid.tail_tol() });
    }
    let n = d[0].nrows();
    let mut samples = vec![CMatrix::zeros(n, n); k];
    let mut total = CMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let line: Vec<C64> = d.iter().map(|m| m[(r, c)]).collect();
            let (cum, sum) = grid.cumulative(&line);
            for (dst, v) in samples.iter_mut().zip(cum) {
                dst[(r, c)] = v;
            }
            total[(r, c)] = sum;
        }
    }
    let limit = GroupElement::new(SmoothingOp::new(total)?)?;
    HalfOpenElement::new(grid.clone(), samples, limit)
}

/// Smooth cutoff on `[0, 1]` with `rho(0) = 0` and `rho = 1` on `[0.8, 1]`.
pub fn cutoff(x: f64) -> f64 {
    let u = x / 0.8;
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / u).exp();
        let b = (-1.0 / (1.0 - u)).exp();
        a / (a + b)
    }
}

/// Reparametrization `psi_t` of the compactified line.
pub fn homotopy_reparam(t: f64, x: f64) -> f64 {
    let r = cutoff(x);
    if t <= 0.5 {
        2.0 * t * r
    } else {
        r + (2.0 * t - 1.0) * (x - r)
    }
}

/// `a o psi_t`: retracts the path group onto the identity as `t` goes from 1 to 0.
pub fn contraction_homotopy(a: &HalfOpenElement, t: f64) -> Result<HalfOpenElement, SuspendError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(SuspendError::ParameterOutOfRange(t));
    }
    if t == 1.0 {
        return Ok(a.clone());
    }
    let grid = a.grid().clone();
    let n_nodes = grid.n_nodes();
    let id = linalg::identity(a.dim());
    let samples = (0..n_nodes)
        .map(|j| {
            let u = (j as f64 + 0.5) / n_nodes as f64;
            a.value_at_u(homotopy_reparam(t, u)) - &id
        })
        .collect();
    let limit = GroupElement::from_value(a.value_at_u(homotopy_reparam(t, 1.0)))?;
    HalfOpenElement::new(grid, samples, limit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> CMatrix {
        CMatrix::from_element(1, 1, C64::new(x, 0.0))
    }

    #[test]
    fn identity_path() {
        let grid = TauGrid::default();
        let p = make_path(&GroupElement::identity(2), &grid, PathOptions::default()).unwrap();
        assert!(p.samples().iter().all(|a| linalg::max_abs(a) == 0.0));
        assert_eq!(restrict_infinity(&p), GroupElement::identity(2));
    }

    #[test]
    fn positive_perturbation_path_keeps_margin() {
        let grid = TauGrid::default();
        let g = GroupElement::from_value(scalar(2.0)).unwrap();
        let p = make_path(&g, &grid, PathOptions::default()).unwrap();
        assert!(p.values().iter().all(|v| v[(0, 0)].re >= 1.0));
        assert_eq!(restrict_infinity(&p).value(), scalar(2.0));
    }

    #[test]
    fn minus_one_needs_a_broken_path() {
        let grid = TauGrid::default();
        let g = GroupElement::from_value(scalar(-1.0)).unwrap();
        let p = make_path(&g, &grid, PathOptions::default()).unwrap();
        assert!(p.values().iter().all(|v| v[(0, 0)].norm() > 1e-2));
        assert_eq!(restrict_infinity(&p).value(), scalar(-1.0));
    }

    #[test]
    fn reconstruct_gaussian_bump() {
        let grid = TauGrid::default();
        let m = CMatrix::from_row_slice(2, 2, &[C64::new(0.2, 0.0), C64::new(0.0, 0.1), C64::new(-0.3, 0.0), C64::new(0.1, 0.1)]);
        let d: Vec<CMatrix> = grid.nodes().iter().map(|&t| &m * C64::new((-t * t).exp(), 0.0)).collect();
        let p = reconstruct_from_derivative(&grid, &d).unwrap();
        let expected = &m * C64::new(std::f64::consts::PI.sqrt(), 0.0);
        assert!(linalg::max_abs(&(p.limit().perturbation().matrix() - expected)) < 1e-8);
    }

    #[test]
    fn reconstruct_zero_is_identity() {
        let grid = TauGrid::default();
        let p = reconstruct_from_derivative(&grid, &vec![CMatrix::zeros(2, 2); grid.n_nodes()]).unwrap();
        assert_eq!(p.limit().value(), linalg::identity(2));
    }

    #[test]
    fn homotopy_endpoints() {
        let grid = TauGrid::default();
        let g = GroupElement::from_value(scalar(1.5)).unwrap();
        let p = make_path(&g, &grid, PathOptions::default()).unwrap();
        assert_eq!(contraction_homotopy(&p, 1.0).unwrap(), p);
        let zero = contraction_homotopy(&p, 0.0).unwrap();
        assert!(zero.samples().iter().all(|a| linalg::max_abs(a) < 1e-15));
        assert!(matches!(contraction_homotopy(&p, 1.5), Err(SuspendError::ParameterOutOfRange(_))));
    }

    #[test]
    fn half_homotopy_is_flat_at_plus_infinity() {
        let grid = TauGrid::default();
        let g = GroupElement::from_value(scalar(1.5)).unwrap();
        let p = make_path(&g, &grid, PathOptions::default()).unwrap();
        let half = contraction_homotopy(&p, 0.5).unwrap();
        let d = half.derivative();
        let k = d.len();
        assert!(linalg::max_abs(&d[k - 1]) < grid.tail_tol());
        assert!(linalg::max_abs(&(&half.values()[k - 1] - scalar(1.5))) < 1e-12);
    }
}
