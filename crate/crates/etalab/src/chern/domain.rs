use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::ChernError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisKind {
    /// Circle `[start, end)` with `end` identified with `start`.
    Periodic,
    /// Closed interval `[start, end]` sampled at both endpoints.
    Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub kind: AxisKind,
    pub start: f64,
    pub end: f64,
    pub n: usize,
}

impl Axis {
    pub fn circle(n: usize) -> Self {
        Self { kind: AxisKind::Periodic, start: 0.0, end: 2.0 * PI, n }
    }

    pub fn periodic(start: f64, end: f64, n: usize) -> Self {
        Self { kind: AxisKind::Periodic, start, end, n }
    }

    pub fn interval(start: f64, end: f64, n: usize) -> Self {
        Self { kind: AxisKind::Interval, start, end, n }
    }

    pub fn step(&self) -> f64 {
        match self.kind {
            AxisKind::Periodic => (self.end - self.start) / self.n as f64,
            AxisKind::Interval => (self.end - self.start) / (self.n - 1) as f64,
        }
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step()
    }

    pub fn is_periodic(&self) -> bool {
        self.kind == AxisKind::Periodic
    }

    /// Same extent with `n` scaled by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        let n = match self.kind {
            AxisKind::Periodic => self.n * factor,
            AxisKind::Interval => (self.n - 1) * factor + 1,
        };
        Self { n, ..*self }
    }
}

/// Tensor-product grid on a parameter space of dimension at most 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDomain {
    axes: Vec<Axis>,
}

impl ParamDomain {
    pub fn new(axes: Vec<Axis>) -> Result<Self, ChernError> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(ChernError::InvalidDomain(format!("dimension must be 1..=3, got {}", axes.len())));
        }
        for (k, a) in axes.iter().enumerate() {
            let min_n = if a.is_periodic() { 4 } else { 3 };
            if a.n < min_n || !(a.end > a.start) {
                return Err(ChernError::InvalidDomain(format!("axis {k} is degenerate: {a:?}")));
            }
        }
        Ok(Self { axes })
    }

    pub fn circle(n: usize) -> Self {
        Self::new(vec![Axis::circle(n)]).expect("valid circle")
    }

    pub fn torus(dims: &[usize]) -> Result<Self, ChernError> {
        Self::new(dims.iter().map(|&n| Axis::circle(n)).collect())
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self { axes: self.axes.iter().map(|a| a.refined(factor)).collect() }
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            out[k] = idx % self.axes[k].n;
            idx /= self.axes[k].n;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.axes).fold(0, |acc, (&i, a)| acc * a.n + i)
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx).iter().zip(&self.axes).map(|(&i, a)| a.coordinate(i)).collect()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Neighbour `offset` steps along `axis`, wrapping on periodic axes.
    pub fn neighbor(&self, idx: usize, axis: usize, offset: isize) -> Option<usize> {
        let mut multi = self.multi_index(idx);
        let a = &self.axes[axis];
        let j = multi[axis] as isize + offset;
        multi[axis] = match a.kind {
            AxisKind::Periodic => j.rem_euclid(a.n as isize) as usize,
            AxisKind::Interval if (0..a.n as isize).contains(&j) => j as usize,
            AxisKind::Interval => return None,
        };
        Some(self.flat_index(&multi))
    }

    /// Volume element of the tensor grid (product of steps).
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.step()).product()
    }
}

/// Second-order difference weights `(offset, weight)` for `d/dx_axis` at `idx`.
pub(crate) fn difference_stencil(domain: &ParamDomain, idx: usize, axis: usize) -> Vec<(usize, f64)> {
    let h = domain.axis(axis).step();
    match (domain.neighbor(idx, axis, -1), domain.neighbor(idx, axis, 1)) {
        (Some(m), Some(p)) => vec![(p, 0.5 / h), (m, -0.5 / h)],
        (None, Some(p)) => {
            let p2 = domain.neighbor(idx, axis, 2).expect("interval axes have at least 3 points");
            vec![(idx, -1.5 / h), (p, 2.0 / h), (p2, -0.5 / h)]
        }
        (Some(m), None) => {
            let m2 = domain.neighbor(idx, axis, -2).expect("interval axes have at least 3 points");
            vec![(idx, 1.5 / h), (m, -2.0 / h), (m2, 0.5 / h)]
        }
        (None, None) => unreachable!("axis has at least 3 points"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let d = ParamDomain::new(vec![Axis::circle(4), Axis::interval(0.0, 1.0, 5), Axis::circle(4)]).unwrap();
        for i in 0..d.len() {
            assert_eq!(d.flat_index(&d.multi_index(i)), i);
        }
        assert_eq!(d.len(), 80);
    }

    #[test]
    fn periodic_neighbors_wrap() {
        let d = ParamDomain::circle(8);
        assert_eq!(d.neighbor(0, 0, -1), Some(7));
        let i = ParamDomain::new(vec![Axis::interval(0.0, 1.0, 5)]).unwrap();
        assert_eq!(i.neighbor(0, 0, -1), None);
    }

    #[test]
    fn rejects_high_dimension() {
        assert!(ParamDomain::torus(&[4, 4, 4, 4]).is_err());
    }
}
