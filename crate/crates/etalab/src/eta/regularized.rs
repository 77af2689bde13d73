use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::EtaError;
use crate::linalg::{self, CMatrix, C64};
use crate::quad::{self, QuadTolerance};
use crate::suspend::ProductSuspendedElement;

/// Truncation radii and fit basis for the symmetric partie finie
/// `lim_T [int_{-T}^{T} F - (growing terms)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizedTraceConfig {
    /// Explicit truncation radii; when empty they are log-spaced over
    /// `[T0, span T0]` with `T0 = max(base_radius, 16 scale)`.
    pub radii: Vec<f64>,
    pub base_radius: f64,
    pub span: f64,
    pub n_radii: usize,
    /// Growth order `m` of the integrand: powers `T^1 ..= T^{m+1}` are fitted.
    pub order: usize,
    /// Decaying powers `T^{-1} ..= T^{-k}` in the fit.
    pub inverse_powers: usize,
    /// Number of derivatives taken before integrating back, as in the
    /// iterated-integral definition; `0` integrates `F` directly.
    pub p_derivatives: usize,
    /// Admissible fit residual relative to `max(|constant|, 1)`.
    pub residual_tol: f64,
}

impl Default for RegularizedTraceConfig {
    fn default() -> Self {
        Self {
            radii: Vec::new(),
            base_radius: 20.0,
            span: 128.0,
            n_radii: 16,
            order: 0,
            inverse_powers: 6,
            p_derivatives: 0,
            residual_tol: 1e-6,
        }
    }
}

impl RegularizedTraceConfig {
    /// Growth order of the integrand. Growing integrands are taken to be
    /// polynomial plus Schwartz, so the decaying powers are dropped and the
    /// radii kept close together, which keeps the fit well conditioned.
    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        if order > 0 {
            self.inverse_powers = 0;
            self.span = 8.0;
        }
        self
    }

    pub fn with_p_derivatives(mut self, p: usize) -> Self {
        self.p_derivatives = p;
        self
    }

    pub fn basis_len(&self) -> usize {
        self.order + 1 + 2 + self.inverse_powers
    }

    /// Radii used for an integrand whose structure lives on `|tau| <~ scale`.
    pub fn radii_for(&self, scale: f64) -> Vec<f64> {
        if !self.radii.is_empty() {
            return self.radii.clone();
        }
        let t0 = self.base_radius.max(16.0 * scale);
        let k = self.n_radii.max(2);
        (0..k).map(|j| t0 * self.span.powf(j as f64 / (k - 1) as f64)).collect()
    }

    fn validate(&self, radii: &[f64]) -> Result<(), EtaError> {
        if radii.len() < self.basis_len() + 4 {
            return Err(EtaError::Config(format!(
                "{} radii for {} basis functions; need at least 4 more",
                radii.len(),
                self.basis_len()
            )));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
            return Err(EtaError::Config("radii must be positive and increasing".into()));
        }
        if self.p_derivatives > 3 {
            return Err(EtaError::Config(format!("p_derivatives {} exceeds 3", self.p_derivatives)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedValue {
    pub value: C64,
    /// Coefficient of `log T`; nonzero values signal a non-classical integrand.
    pub log_coefficient: C64,
    pub residual: f64,
}

const QUAD: QuadTolerance = QuadTolerance { abs: 1e-14, rel: 1e-13, max_panels: 4000 };

/// `int_{-T}^{T} f` for each radius, accumulated over nested shells.
fn truncated_integrals<F: Fn(f64) -> Vec<C64>>(f: &F, dim: usize, radii: &[f64]) -> Result<Vec<Vec<C64>>, EtaError> {
    let mut acc = vec![C64::new(0.0, 0.0); dim];
    let mut out = Vec::with_capacity(radii.len());
    let mut prev = 0.0;
    for &t in radii {
        for (a, b) in [(prev, t), (-t, -prev)] {
            let r = quad::integrate(f, a, b, QUAD);
            if !r.converged {
                return Err(EtaError::Quadrature { radius: t, error: r.error });
            }
            for (s, v) in acc.iter_mut().zip(&r.value) {
                *s += v;
            }
        }
        out.push(acc.clone());
        prev = t;
    }
    Ok(out)
}

/// Subtracts the odd-in-`T` polynomial that the iterated integrals of the
/// `p`-th derivative drop: `sum_{k < p, k even} 2 F^(k)(0) T^{k+1} / (k+1)!`.
fn taylor_correction<F: Fn(f64) -> Vec<C64>>(f: &F, p: usize, t: f64) -> Vec<C64> {
    let f0 = f(0.0);
    if p == 0 {
        return vec![C64::new(0.0, 0.0); f0.len()];
    }
    let mut out: Vec<C64> = f0.iter().map(|z| z * (2.0 * t)).collect();
    if p >= 3 {
        let h = 1e-3;
        let (fp, fm) = (f(h), f(-h));
        for (d, o) in out.iter_mut().enumerate() {
            let second = (fp[d] - f0[d] * 2.0 + fm[d]) / (h * h);
            *o += second * (2.0 * t.powi(3) / 6.0);
        }
    }
    out
}

/// Regularized integrals of each component of a vector integrand.
///
/// `scale` sets the automatic radii: the integrand should already show its
/// asymptotic behaviour beyond `|tau| ~ scale`.
pub fn regularized_trace_vec<F>(f: &F, dim: usize, scale: f64, cfg: &RegularizedTraceConfig) -> Result<Vec<RegularizedValue>, EtaError>
where
    F: Fn(f64) -> Vec<C64>,
{
    let radii = cfg.radii_for(scale);
    cfg.validate(&radii)?;
    let mut integrals = truncated_integrals(f, dim, &radii)?;
    if cfg.p_derivatives > 0 {
        for (row, &t) in integrals.iter_mut().zip(&radii) {
            for (v, c) in row.iter_mut().zip(taylor_correction(f, cfg.p_derivatives, t)) {
                *v -= c;
            }
        }
    }
    let t0 = radii[0];
    let positive = cfg.order + 1;
    let cols = cfg.basis_len();
    let design = DMatrix::from_fn(radii.len(), cols, |r, c| {
        let s = radii[r] / t0;
        if c < positive {
            s.powi(c as i32 + 1)
        } else if c == positive {
            s.ln()
        } else if c == positive + 1 {
            1.0
        } else {
            s.powi(-((c - positive - 1) as i32))
        }
    });
    let svd = design.clone().svd(true, true);
    let (smax, smin) = svd.singular_values.iter().fold((0.0f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
    if !(smin > 1e-13 * smax) {
        return Err(EtaError::IllConditioned { condition: smax / smin });
    }
    (0..dim)
        .map(|d| {
            let re = DVector::from_iterator(radii.len(), integrals.iter().map(|row| row[d].re));
            let im = DVector::from_iterator(radii.len(), integrals.iter().map(|row| row[d].im));
            let cre = svd.solve(&re, 0.0).map_err(|e| EtaError::Config(e.to_string()))?;
            let cim = svd.solve(&im, 0.0).map_err(|e| EtaError::Config(e.to_string()))?;
            let fitted_re = &design * &cre;
            let fitted_im = &design * &cim;
            let residual = (0..radii.len())
                .map(|r| C64::new(re[r] - fitted_re[r], im[r] - fitted_im[r]).norm())
                .fold(0.0, f64::max);
            let log_coefficient = C64::new(cre[positive], cim[positive]);
            // the fit uses log(T / T0); move the constant back to log T
            let value = C64::new(cre[positive + 1], cim[positive + 1]) - log_coefficient * t0.ln();
            if residual > cfg.residual_tol * value.norm().max(1.0) {
                return Err(EtaError::FitResidual { residual, value: value.norm() });
            }
            Ok(RegularizedValue { value, log_coefficient, residual })
        })
        .collect()
}

/// Regularized integral of a scalar function with polynomial growth of the
/// configured order plus a Schwartz remainder.
pub fn regularized_trace<F: Fn(f64) -> C64>(f: &F, cfg: &RegularizedTraceConfig) -> Result<RegularizedValue, EtaError> {
    Ok(regularized_trace_vec(&|t| vec![f(t)], 1, 1.0, cfg)?[0])
}

/// `Tr_R(Tr da/dtau)` for a closed-form `tau`-derivative.
pub fn formal_trace_fn<F: Fn(f64) -> CMatrix>(da: &F, cfg: &RegularizedTraceConfig) -> Result<C64, EtaError> {
    Ok(regularized_trace(&|t| linalg::trace(&da(t)), cfg)?.value)
}

/// Formal trace of a product-suspended element: the polynomial part is
/// regularized in closed form, the sampled Schwartz part is integrated on its grid.
pub fn formal_trace(a: &ProductSuspendedElement, cfg: &RegularizedTraceConfig) -> Result<C64, EtaError> {
    let coeffs = a.poly_coeffs();
    let degree = coeffs.len() - 1;
    let derivative = |t: f64| -> C64 {
        (1..=degree).rev().fold(C64::new(0.0, 0.0), |acc, k| acc * t + linalg::trace(&coeffs[k]) * k as f64)
    };
    let cfg = if degree > 1 && cfg.order < degree - 1 { cfg.clone().with_order(degree - 1) } else { cfg.clone() };
    let poly = if degree == 0 { C64::new(0.0, 0.0) } else { regularized_trace(&derivative, &cfg)?.value };
    let grid = a.grid();
    let traces: Vec<C64> = a.schwartz_part().iter().map(linalg::trace).collect();
    let schwartz = grid.quadrature(&grid.derivative_flat(&traces))?;
    Ok(poly + schwartz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_is_ordinary_integral() {
        let v = regularized_trace(&|t: f64| C64::new((-t * t).exp(), 0.0), &RegularizedTraceConfig::default()).unwrap();
        assert!((v.value.re - PI.sqrt()).abs() < 1e-8, "{:?}", v);
    }

    #[test]
    fn resolvent_gives_half_sign() {
        for lambda in [0.7, -1.3, 2.5] {
            let v = regularized_trace(&|t: f64| C64::new(0.0, 1.0) / C64::new(lambda, t), &RegularizedTraceConfig::default()).unwrap();
            let expect = C64::new(0.0, PI * f64::signum(lambda));
            assert!((v.value - expect).norm() < 1e-6, "{lambda}: {:?}", v);
        }
    }

    #[test]
    fn pure_polynomial_has_no_constant_term() {
        let cfg = RegularizedTraceConfig::default().with_order(2);
        let v = regularized_trace(&|t: f64| C64::new(t * t, 0.0), &cfg).unwrap();
        assert!(v.value.norm() < 1e-6, "{:?}", v);
    }

    #[test]
    fn iterated_derivative_mode_agrees() {
        let f = |t: f64| C64::new(1.0 + 0.3 * t * t + (-t * t).exp(), 0.0);
        let direct = regularized_trace(&f, &RegularizedTraceConfig::default().with_order(2)).unwrap();
        let iterated = regularized_trace(&f, &RegularizedTraceConfig::default().with_order(2).with_p_derivatives(3)).unwrap();
        assert!((direct.value - PI.sqrt()).norm() < 1e-6);
        assert!((direct.value - iterated.value).norm() < 1e-6);
    }

    #[test]
    fn too_few_radii_is_rejected() {
        let cfg = RegularizedTraceConfig { n_radii: 8, ..Default::default() };
        assert!(matches!(regularized_trace(&|_| C64::new(1.0, 0.0), &cfg), Err(EtaError::Config(_))));
    }

    #[test]
    fn arctan_trace_is_pi() {
        let da = |t: f64| {
            let mut m = CMatrix::zeros(2, 2);
            m[(0, 0)] = C64::new(1.0 / (1.0 + t * t), 0.0);
            m
        };
        let v = formal_trace_fn(&da, &RegularizedTraceConfig::default()).unwrap();
        assert!((v.re - PI).abs() < 1e-8, "{v}");
    }
}
