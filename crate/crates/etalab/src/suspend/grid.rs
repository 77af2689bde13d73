use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::SuspendError;
use crate::linalg::{CMatrix, C64};

pub const DEFAULT_NODES: usize = 128;
pub const DEFAULT_SCALE: f64 = 4.0;
pub const DEFAULT_TAIL_TOL: f64 = 1e-8;

/// Compactified grid `tau = L tan(theta)` with `theta` on the midpoints of a
/// uniform partition of `(-pi/2, pi/2)`.
///
/// Functions that are flat at both ends become smooth periodic functions of
/// `theta`, so the midpoint rule and FFT differentiation are spectrally accurate.
#[derive(Clone)]
pub struct TauGrid {
    scale: f64,
    tail_tol: f64,
    theta: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    backward: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TauGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TauGrid")
            .field("n_nodes", &self.n_nodes())
            .field("scale", &self.scale)
            .field("tail_tol", &self.tail_tol)
            .finish()
    }
}

impl PartialEq for TauGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n_nodes() == other.n_nodes() && self.scale == other.scale && self.tail_tol == other.tail_tol
    }
}

impl Default for TauGrid {
    fn default() -> Self {
        Self::new(DEFAULT_NODES, DEFAULT_SCALE).expect("default grid is valid")
    }
}

impl TauGrid {
    pub fn new(n_nodes: usize, scale: f64) -> Result<Self, SuspendError> {
        Self::with_tail_tol(n_nodes, scale, DEFAULT_TAIL_TOL)
    }

    pub fn with_tail_tol(n_nodes: usize, scale: f64, tail_tol: f64) -> Result<Self, SuspendError> {
        if n_nodes < 8 || n_nodes % 2 != 0 {
            return Err(SuspendError::InvalidGrid(format!("n_nodes must be even and >= 8, got {n_nodes}")));
        }
        if !(scale > 0.0) || !(tail_tol > 0.0) {
            return Err(SuspendError::InvalidGrid(format!("scale {scale} and tail_tol {tail_tol} must be positive")));
        }
        let h = PI / n_nodes as f64;
        let theta: Vec<f64> = (0..n_nodes).map(|j| -PI / 2.0 + (j as f64 + 0.5) * h).collect();
        let nodes = theta.iter().map(|t| scale * t.tan()).collect();
        let weights = theta.iter().map(|t| h * scale / (t.cos() * t.cos())).collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            scale,
            tail_tol,
            forward: planner.plan_fft_forward(n_nodes),
            backward: planner.plan_fft_inverse(n_nodes),
            theta,
            nodes,
            weights,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Same scale and tolerance, twice the nodes.
    pub fn refined(&self) -> Self {
        Self::with_tail_tol(2 * self.n_nodes(), self.scale, self.tail_tol).expect("refinement of a valid grid")
    }

    pub fn with_nodes(&self, n_nodes: usize) -> Result<Self, SuspendError> {
        Self::with_tail_tol(n_nodes, self.scale, self.tail_tol)
    }

    /// `d tau / d theta` at each node.
    pub fn jacobian(&self) -> impl Iterator<Item = f64> + '_ {
        self.theta.iter().map(move |t| self.scale / (t.cos() * t.cos()))
    }

    /// Midpoint rule in `theta`, refusing integrands that have not decayed at the ends.
    pub fn quadrature(&self, f: &[C64]) -> Result<C64, SuspendError> {
        self.check_len(f.len())?;
        let n = f.len();
        let tail = [f[0], f[1], f[n - 2], f[n - 1]].iter().map(|z| z.norm()).fold(0.0, f64::max);
        if tail > self.tail_tol {
            return Err(SuspendError::TailTolerance { tail, tol: self.tail_tol });
        }
        Ok(self.quadrature_unchecked(f))
    }

    /// Midpoint rule without the decay check; exact in the limit for integrands
    /// whose `theta`-pullback is smooth and periodic, such as `1/(1 + tau^2)`.
    pub fn quadrature_unchecked(&self, f: &[C64]) -> C64 {
        f.iter().zip(&self.weights).map(|(z, w)| z * *w).sum()
    }

    pub fn quadrature_matrix(&self, f: &[CMatrix]) -> Result<CMatrix, SuspendError> {
        let n = f.first().map_or(0, |m| m.nrows());
        let mut out = CMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                let line: Vec<C64> = f.iter().map(|m| m[(r, c)]).collect();
                out[(r, c)] = self.quadrature(&line)?;
            }
        }
        Ok(out)
    }

    fn check_len(&self, len: usize) -> Result<(), SuspendError> {
        if len != self.n_nodes() {
            return Err(SuspendError::LengthMismatch { expected: self.n_nodes(), got: len });
        }
        Ok(())
    }

    fn spectrum(&self, f: &[C64]) -> Vec<C64> {
        let mut buf = f.to_vec();
        self.forward.process(&mut buf);
        buf
    }

    fn signed_frequency(&self, m: usize) -> Option<f64> {
        let n = self.n_nodes();
        if 2 * m == n {
            None
        } else if 2 * m < n {
            Some(m as f64)
        } else {
            Some(m as f64 - n as f64)
        }
    }

    /// Derivative in `u = (theta + pi/2)/pi` of a periodic sample sequence.
    fn derivative_u(&self, f: &[C64]) -> Vec<C64> {
        let n = self.n_nodes();
        let mut spec = self.spectrum(f);
        for (m, z) in spec.iter_mut().enumerate() {
            *z = match self.signed_frequency(m) {
                Some(k) => *z * C64::new(0.0, 2.0 * PI * k) / n as f64,
                None => C64::new(0.0, 0.0),
            };
        }
        self.backward.process(&mut spec);
        spec
    }

    /// `d/dtau` of a sequence that is flat at both ends (Schwartz class).
    pub fn derivative_flat(&self, f: &[C64]) -> Vec<C64> {
        let du = self.derivative_u(f);
        du.iter()
            .zip(&self.theta)
            .map(|(z, t)| z * (t.cos() * t.cos() / (PI * self.scale)))
            .collect()
    }

    /// `d/dtau` of a sequence with limits `minus` at `-inf` and `plus` at `+inf`.
    pub fn derivative(&self, f: &[C64], minus: C64, plus: C64) -> Vec<C64> {
        let jump = plus - minus;
        let reduced: Vec<C64> = f.iter().zip(&self.nodes).map(|(z, &t)| z - minus - jump * ramp(t)).collect();
        self.derivative_flat(&reduced)
            .into_iter()
            .zip(&self.nodes)
            .map(|(z, &t)| z + jump * ramp_derivative(t))
            .collect()
    }

    /// `int_{-inf}^{tau_j} f` for a flat-ended integrand, plus the total integral.
    pub fn cumulative(&self, f: &[C64]) -> (Vec<C64>, C64) {
        let n = self.n_nodes();
        let g: Vec<C64> = f.iter().zip(self.jacobian()).map(|(z, j)| z * (j * PI)).collect();
        let spec = self.spectrum(&g);
        let c0 = spec[0] / n as f64;
        let mut scaled = vec![C64::new(0.0, 0.0); n];
        let mut offset = C64::new(0.0, 0.0);
        for (m, z) in spec.iter().enumerate() {
            if m == 0 {
                continue;
            }
            if let Some(k) = self.signed_frequency(m) {
                let factor = C64::new(0.0, 2.0 * PI * k);
                scaled[m] = z / factor / n as f64;
                offset += z / factor / n as f64 * C64::from_polar(1.0, -PI * k / n as f64);
            }
        }
        self.backward.process(&mut scaled);
        let values = scaled
            .iter()
            .enumerate()
            .map(|(j, z)| c0 * ((j as f64 + 0.5) / n as f64) + z - offset)
            .collect();
        (values, c0)
    }

    /// Trigonometric interpolation of a flat-ended sequence at `u` in `[0, 1]`.
    pub fn interpolate_flat(&self, f: &[C64], u: f64) -> C64 {
        let n = self.n_nodes();
        let spec = self.spectrum(f);
        self.evaluate_spectrum(&spec, u) / n as f64
    }

    /// Evaluates many points against one spectrum (unnormalized forward FFT).
    pub(crate) fn evaluate_spectrum(&self, spec: &[C64], u: f64) -> C64 {
        let n = self.n_nodes();
        spec.iter()
            .enumerate()
            .filter_map(|(m, z)| self.signed_frequency(m).map(|k| (k, z)))
            .map(|(k, z)| z * C64::from_polar(1.0, 2.0 * PI * k * (u - 0.5 / n as f64)))
            .sum()
    }

    pub fn u_of_tau(&self, tau: f64) -> f64 {
        ((tau / self.scale).atan() + PI / 2.0) / PI
    }

    pub fn tau_of_u(&self, u: f64) -> f64 {
        if u <= 0.0 {
            f64::NEG_INFINITY
        } else if u >= 1.0 {
            f64::INFINITY
        } else {
            self.scale * (PI * (u - 0.5)).tan()
        }
    }
}

/// Smooth monotone ramp from 0 at `-inf` to 1 at `+inf`.
pub fn ramp(tau: f64) -> f64 {
    0.5 * (1.0 + tau.tanh())
}

pub fn ramp_derivative(tau: f64) -> f64 {
    let c = tau.cosh();
    if c.is_finite() {
        0.5 / (c * c)
    } else {
        0.0
    }
}

/// Applies a scalar sequence operation entrywise to a sequence of matrices.
pub fn map_entries(samples: &[CMatrix], op: impl Fn(&[C64]) -> Vec<C64>) -> Vec<CMatrix> {
    let n = samples.first().map_or(0, |m| m.nrows());
    let mut out = vec![CMatrix::zeros(n, n); samples.len()];
    for r in 0..n {
        for c in 0..n {
            let line: Vec<C64> = samples.iter().map(|m| m[(r, c)]).collect();
            for (dst, v) in out.iter_mut().zip(op(&line)) {
                dst[(r, c)] = v;
            }
        }
    }
    out
}
