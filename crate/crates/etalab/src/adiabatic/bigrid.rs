use super::AdiabaticError;
use crate::linalg::{CMatrix, C64};
use crate::suspend::TauGrid;

pub const DEFAULT_BI_NODES: usize = 64;
pub const DEFAULT_BI_SCALE: f64 = 2.5;

/// Product of two compactified grids, `t` first and `tau` second.
///
/// Samples are stored row-major: index `i * n_tau + j` holds `(t_i, tau_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiGrid {
    t: TauGrid,
    tau: TauGrid,
}

impl Default for BiGrid {
    fn default() -> Self {
        let g = TauGrid::new(DEFAULT_BI_NODES, DEFAULT_BI_SCALE).expect("default grid is valid");
        Self { t: g.clone(), tau: g }
    }
}

impl BiGrid {
    pub fn new(t: TauGrid, tau: TauGrid) -> Self {
        Self { t, tau }
    }

    pub fn square(n_nodes: usize, scale: f64) -> Result<Self, AdiabaticError> {
        let g = TauGrid::new(n_nodes, scale)?;
        Ok(Self { t: g.clone(), tau: g })
    }

    pub fn t(&self) -> &TauGrid {
        &self.t
    }

    pub fn tau(&self) -> &TauGrid {
        &self.tau
    }

    pub fn n_t(&self) -> usize {
        self.t.n_nodes()
    }

    pub fn n_tau(&self) -> usize {
        self.tau.n_nodes()
    }

    pub fn len(&self) -> usize {
        self.n_t() * self.n_tau()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_tau() + j
    }

    /// `(t, tau)` at a flat index.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let (i, j) = (idx / self.n_tau(), idx % self.n_tau());
        (self.t.nodes()[i], self.tau.nodes()[j])
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> CMatrix) -> Vec<CMatrix> {
        self.points().map(|(t, tau)| f(t, tau)).collect()
    }

    /// Both node counts doubled.
    pub fn refined(&self) -> Self {
        Self { t: self.t.refined(), tau: self.tau.refined() }
    }

    /// Product midpoint rule; refuses integrands that have not decayed on the
    /// outer ring of nodes.
    pub fn quadrature(&self, f: &[C64]) -> Result<C64, AdiabaticError> {
        self.check_len(f.len())?;
        let (nt, ntau) = (self.n_t(), self.n_tau());
        let tol = self.t.tail_tol().max(self.tau.tail_tol());
        let tail = (0..nt)
            .flat_map(|i| [f[self.index(i, 0)], f[self.index(i, ntau - 1)]])
            .chain((0..ntau).flat_map(|j| [f[self.index(0, j)], f[self.index(nt - 1, j)]]))
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if tail > tol {
            return Err(AdiabaticError::Decay { what: "integrand", tail });
        }
        Ok(self.quadrature_unchecked(f))
    }

    pub fn quadrature_unchecked(&self, f: &[C64]) -> C64 {
        let (wt, wtau) = (self.t.weights(), self.tau.weights());
        f.chunks(self.n_tau())
            .zip(wt)
            .map(|(row, a)| row.iter().zip(wtau).map(|(z, b)| z * *b).sum::<C64>() * *a)
            .sum()
    }

    /// `d/dtau` of a field whose value is the same constant at both `tau` ends.
    pub fn d_tau(&self, f: &[CMatrix]) -> Result<Vec<CMatrix>, AdiabaticError> {
        self.check_len(f.len())?;
        let n = f[0].nrows();
        let mut out = vec![CMatrix::zeros(n, n); f.len()];
        let ntau = self.n_tau();
        let mut line = vec![C64::new(0.0, 0.0); ntau];
        for i in 0..self.n_t() {
            for r in 0..n {
                for c in 0..n {
                    for (j, z) in line.iter_mut().enumerate() {
                        *z = f[i * ntau + j][(r, c)];
                    }
                    for (j, z) in self.tau.derivative_flat(&line).into_iter().enumerate() {
                        out[i * ntau + j][(r, c)] = z;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `d/dt` of a field with limits `minus[j]` at `t = -inf` and `plus[j]`
    /// at `t = +inf` along each `tau`-column.
    pub fn d_t(&self, f: &[CMatrix], minus: &[CMatrix], plus: &[CMatrix]) -> Result<Vec<CMatrix>, AdiabaticError> {
        self.check_len(f.len())?;
        let ntau = self.n_tau();
        if minus.len() != ntau || plus.len() != ntau {
            return Err(AdiabaticError::Mismatch(format!(
                "boundary slices have {} and {} samples, grid has {ntau}",
                minus.len(),
                plus.len()
            )));
        }
        let n = f[0].nrows();
        let mut out = vec![CMatrix::zeros(n, n); f.len()];
        let mut line = vec![C64::new(0.0, 0.0); self.n_t()];
        for j in 0..ntau {
            for r in 0..n {
                for c in 0..n {
                    for (i, z) in line.iter_mut().enumerate() {
                        *z = f[i * ntau + j][(r, c)];
                    }
                    let d = self.t.derivative(&line, minus[j][(r, c)], plus[j][(r, c)]);
                    for (i, z) in d.into_iter().enumerate() {
                        out[i * ntau + j][(r, c)] = z;
                    }
                }
            }
        }
        Ok(out)
    }

    fn check_len(&self, len: usize) -> Result<(), AdiabaticError> {
        if len != self.len() {
            return Err(AdiabaticError::Mismatch(format!("expected {} samples, got {len}", self.len())));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(z: f64) -> CMatrix {
        CMatrix::from_element(1, 1, C64::new(z, 0.0))
    }

    #[test]
    fn gaussian_derivatives_are_accurate() {
        let g = BiGrid::default();
        let f = g.sample(|t, tau| scalar((-t * t - 0.5 * tau * tau).exp()));
        let one = vec![scalar(0.0); g.n_tau()];
        let dt = g.d_t(&f, &one, &one).unwrap();
        let dtau = g.d_tau(&f).unwrap();
        let err = g
            .points()
            .enumerate()
            .map(|(k, (t, tau))| {
                let e = (-t * t - 0.5 * tau * tau).exp();
                (dt[k][(0, 0)].re + 2.0 * t * e).abs().max((dtau[k][(0, 0)].re + tau * e).abs())
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn ramp_columns_use_their_limits() {
        let g = BiGrid::default();
        let f = g.sample(|t, tau| scalar(1.0 + crate::suspend::ramp(t) * (-tau * tau).exp()));
        let minus = vec![scalar(1.0); g.n_tau()];
        let plus: Vec<CMatrix> = g.tau().nodes().iter().map(|tau| scalar(1.0 + (-tau * tau).exp())).collect();
        let dt = g.d_t(&f, &minus, &plus).unwrap();
        let err = g
            .points()
            .enumerate()
            .map(|(k, (t, tau))| (dt[k][(0, 0)].re - crate::suspend::ramp_derivative(t) * (-tau * tau).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn gaussian_integral() {
        let g = BiGrid::default();
        let f: Vec<C64> = g.points().map(|(t, tau)| C64::new((-t * t - tau * tau).exp(), 0.0)).collect();
        let v = g.quadrature(&f).unwrap();
        assert!((v.re - std::f64::consts::PI).abs() < 1e-10);
        let slow: Vec<C64> = g.points().map(|(t, _)| C64::new(1.0 / (1.0 + t * t), 0.0)).collect();
        assert!(g.quadrature(&slow).is_err());
    }
}
