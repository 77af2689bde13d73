use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

use rayon::prelude::*;

use super::character::{odd_coefficient, odd_component_from_x};
use super::family::{DecayClass, GroupFamily, SuspendedFamily};
use super::form::FormField;
use super::ChernError;
use crate::linalg::{self, block_diag, gauss_legendre, increasing_tuples, CMatrix, C64};

/// Gauss-Legendre nodes used for the rotation parameter.
pub const ROTATION_NODES: usize = 32;

/// One factor of a pair at a point: value, inverse and derivatives along each
/// coordinate direction.
#[derive(Debug, Clone)]
pub struct PointJet {
    pub value: CMatrix,
    pub inverse: CMatrix,
    pub derivatives: Vec<CMatrix>,
}

impl PointJet {
    pub fn new(value: CMatrix, derivatives: Vec<CMatrix>) -> Option<Self> {
        let inverse = linalg::inverse(&value)?;
        Some(Self { value, inverse, derivatives })
    }

    /// The jet of the pointwise inverse.
    pub fn inverted(&self) -> Self {
        Self {
            value: self.inverse.clone(),
            inverse: self.value.clone(),
            derivatives: self.derivatives.iter().map(|d| -(&self.inverse * d * &self.inverse)).collect(),
        }
    }
}

fn rotation(t: f64, n: usize) -> (CMatrix, CMatrix, CMatrix, CMatrix) {
    let (s, c) = t.sin_cos();
    let id = linalg::identity(n);
    let block = |a: f64, b: f64, cc: f64, d: f64| {
        let mut m = CMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&(&id * C64::new(a, 0.0)));
        m.view_mut((0, n), (n, n)).copy_from(&(&id * C64::new(b, 0.0)));
        m.view_mut((n, 0), (n, n)).copy_from(&(&id * C64::new(cc, 0.0)));
        m.view_mut((n, n), (n, n)).copy_from(&(&id * C64::new(d, 0.0)));
        m
    };
    let m = block(c, s, -s, c);
    let m_inv = block(c, -s, s, c);
    let dm = block(-s, c, -c, -s);
    let dm_inv = block(-s, -c, c, -s);
    (m, m_inv, dm, dm_inv)
}

/// `-int_0^{pi/2} alpha_1(t) dt` for the rotation homotopy
/// `H(t) = diag(a, Id) M(t)^{-1} diag(b, Id) M(t)`.
///
/// Returns the 0-form part and the 2-form components on the given ordered
/// pairs of derivative directions.
fn homotopy_integral(a: &PointJet, b: &PointJet, pairs: &[[usize; 2]]) -> (C64, Vec<C64>) {
    let n = a.value.nrows();
    let zero = CMatrix::zeros(n, n);
    let id = linalg::identity(n);
    let big_a = block_diag(&a.value, &id);
    let big_a_inv = block_diag(&a.inverse, &id);
    let db = block_diag(&b.value, &id);
    let db_inv = block_diag(&b.inverse, &id);
    let mut deg0 = C64::new(0.0, 0.0);
    let mut deg2 = vec![C64::new(0.0, 0.0); pairs.len()];
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    for &(t, w) in NODES.get_or_init(|| gauss_legendre(ROTATION_NODES, 0.0, FRAC_PI_2)) {
        let (m, m_inv, dm, dm_inv) = rotation(t, n);
        let bt = &m_inv * &db * &m;
        let h_inv = &m_inv * &db_inv * &m * &big_a_inv;
        let dt_h = &big_a * (&dm_inv * &db * &m + &m_inv * &db * &dm);
        let x_t = &h_inv * &dt_h;
        deg0 += odd_coefficient(0) * linalg::trace(&x_t) * w;
        if pairs.is_empty() {
            continue;
        }
        let dirs = a.derivatives.len();
        let x: Vec<CMatrix> = (0..dirs)
            .map(|k| {
                let da = block_diag(&a.derivatives[k], &zero);
                let dbk = &m_inv * block_diag(&b.derivatives[k], &zero) * &m;
                &h_inv * (da * &bt + &big_a * dbk)
            })
            .collect();
        for (c, &[p, q]) in pairs.iter().enumerate() {
            deg2[c] += odd_component_from_x(&[&x_t, &x[p], &x[q]]) * w;
        }
    }
    (-deg0, deg2.into_iter().map(|z| -z).collect())
}

/// The transgression at one point, antisymmetrized under `(a, b) -> (b^{-1}, a^{-1})`.
pub fn delta_even_point(a: &PointJet, b: &PointJet, pairs: &[[usize; 2]]) -> (C64, Vec<C64>) {
    let (f0, f2) = homotopy_integral(a, b, pairs);
    let (g0, g2) = homotopy_integral(&b.inverted(), &a.inverted(), pairs);
    let half = C64::new(0.5, 0.0);
    ((f0 - g0) * half, f2.iter().zip(&g2).map(|(x, y)| (x - y) * half).collect())
}

/// Even transgression form for a pair of families on one domain: degree 0
/// and, for `d >= 2`, degree 2.
pub fn transgression_delta_even(a: &GroupFamily, b: &GroupFamily) -> Result<Vec<FormField>, ChernError> {
    if a.domain() != b.domain() {
        return Err(ChernError::InvalidDomain("pair families must share a domain".into()));
    }
    if a.size() != b.size() {
        return Err(ChernError::InvalidDomain("pair families must share a matrix size".into()));
    }
    let domain = a.domain().clone();
    let (ja, jb) = (a.jets()?, b.jets()?);
    let pairs: Vec<[usize; 2]> = increasing_tuples(domain.dim(), 2).into_iter().map(|t| [t[0], t[1]]).collect();
    let results: Vec<(C64, Vec<C64>)> = (0..domain.len())
        .into_par_iter()
        .map(|p| {
            let pa = PointJet { value: ja.values[p].clone(), inverse: ja.inverses[p].clone(), derivatives: ja.partials[p].clone() };
            let pb = PointJet { value: jb.values[p].clone(), inverse: jb.inverses[p].clone(), derivatives: jb.partials[p].clone() };
            delta_even_point(&pa, &pb, &pairs)
        })
        .collect();
    let mut forms = vec![FormField::scalar(domain.clone(), results.iter().map(|r| r.0).collect())?];
    if domain.dim() >= 2 {
        forms.push(FormField::from_fn(domain, 2, |p| results[p].1.clone())?);
    }
    Ok(forms)
}

/// Degree-1 odd transgression `-int_R delta'(tau) d tau` for a pair of
/// suspended families.
pub fn transgression_delta_odd(a: &SuspendedFamily, b: &SuspendedFamily) -> Result<FormField, ChernError> {
    if a.domain() != b.domain() || a.grid() != b.grid() {
        return Err(ChernError::InvalidDomain("pair families must share domain and grid".into()));
    }
    delta_odd_impl(a, b, false)
}

/// As [`transgression_delta_odd`] but for the pair `(a, b^{-1})`, allowing
/// half-open factors whose limits cancel.
pub fn transgression_delta_odd_twisted(a: &SuspendedFamily, b: &SuspendedFamily) -> Result<FormField, ChernError> {
    if a.domain() != b.domain() || a.grid() != b.grid() {
        return Err(ChernError::InvalidDomain("pair families must share domain and grid".into()));
    }
    delta_odd_impl(a, b, true)
}

fn delta_odd_impl(a: &SuspendedFamily, b: &SuspendedFamily, invert_b: bool) -> Result<FormField, ChernError> {
    if !invert_b && (a.class() != DecayClass::Schwartz || b.class() != DecayClass::Schwartz) {
        return Err(ChernError::WrongClass("delta_odd needs Schwartz loops"));
    }
    let domain = a.domain().clone();
    let d = domain.dim();
    let grid = a.grid().clone();
    let pairs: Vec<[usize; 2]> = (0..d).map(|i| [d, i]).collect();
    let results = (0..domain.len())
        .into_par_iter()
        .map(|p| {
            let (la, lb) = (a.line(p)?, b.line(p)?);
            let mut lines = vec![Vec::with_capacity(grid.n_nodes()); d];
            for j in 0..grid.n_nodes() {
                let jet = |l: &super::family::LineJets| {
                    let mut ds: Vec<CMatrix> = (0..d).map(|i| l.dy[i][j].clone()).collect();
                    ds.push(l.dtau[j].clone());
                    PointJet { value: l.values[j].clone(), inverse: l.inverses[j].clone(), derivatives: ds }
                };
                let ja = jet(&la);
                let jb = if invert_b { jet(&lb).inverted() } else { jet(&lb) };
                let (_, comps) = delta_even_point(&ja, &jb, &pairs);
                for (i, v) in comps.into_iter().enumerate() {
                    lines[i].push(v);
                }
            }
            lines
                .iter()
                .map(|f| grid.quadrature(f).map(|z| -z).map_err(|e| ChernError::Quadrature { point: p, source: e }))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    FormField::from_fn(domain, 1, |p| results[p].clone())
}
