use rayon::prelude::*;

use super::family::{DecayClass, GroupFamily, LineJets, SuspendedFamily};
use super::form::FormField;
use super::ChernError;
use crate::linalg::{self, factorial, increasing_tuples, signed_permutations, CMatrix, C64, TWO_PI_I};

/// `c_k = k! / ((2 pi i)^{k+1} (2k+1)!)`.
pub fn odd_coefficient(k: usize) -> C64 {
    C64::new(factorial(k) / factorial(2 * k + 1), 0.0) / TWO_PI_I.powu(k as u32 + 1)
}

/// Degree-`(2k+1)` component `c_k sum_sigma sign Tr(X_sigma(0) ... X_sigma(2k))`
/// with `X_i = a^{-1} b_i`.
pub fn odd_component(inverse: &CMatrix, derivatives: &[&CMatrix]) -> C64 {
    let m = derivatives.len();
    assert!(m % 2 == 1, "odd forms only");
    let xs: Vec<CMatrix> = derivatives.iter().map(|b| inverse * *b).collect();
    odd_component_from_x(&xs.iter().collect::<Vec<_>>())
}

pub(crate) fn odd_component_from_x(xs: &[&CMatrix]) -> C64 {
    let m = xs.len();
    let k = (m - 1) / 2;
    match m {
        1 => return odd_coefficient(0) * linalg::trace(xs[0]),
        3 => {
            let total = linalg::trace_product(&(xs[0] * xs[1]), xs[2]) - linalg::trace_product(&(xs[0] * xs[2]), xs[1]);
            return odd_coefficient(1) * total * 3.0;
        }
        _ => {}
    }
    let total: C64 = signed_permutations(m)
        .into_iter()
        .filter(|(p, _)| p[0] == 0)
        .map(|(p, sign)| {
            let prod = p[1..m - 1].iter().fold(xs[p[0]].clone(), |acc, &q| acc * xs[q]);
            linalg::trace_product(&prod, xs[p[m - 1]]) * sign
        })
        .sum();
    // cyclic invariance of the trace: each cyclic class has m members with equal sign
    odd_coefficient(k) * total * m as f64
}

/// Odd Chern character of a family, degrees 1 and 3 up to the domain dimension.
pub fn ch_odd(family: &GroupFamily) -> Result<Vec<FormField>, ChernError> {
    let jets = family.jets()?;
    let domain = family.domain().clone();
    let d = domain.dim();
    let xs: Vec<Vec<CMatrix>> = jets
        .inverses
        .par_iter()
        .zip(&jets.partials)
        .map(|(inv, ps)| ps.iter().map(|b| inv * b).collect())
        .collect();
    let mut forms = Vec::new();
    for degree in (1..=d).step_by(2) {
        let tuples = increasing_tuples(d, degree);
        let values: Vec<Vec<C64>> = xs
            .par_iter()
            .map(|x| {
                tuples
                    .iter()
                    .map(|t| odd_component_from_x(&t.iter().map(|&i| &x[i]).collect::<Vec<_>>()))
                    .collect()
            })
            .collect();
        forms.push(FormField::from_fn(domain.clone(), degree, |p| values[p].clone())?);
    }
    Ok(forms)
}

/// `(1/2 pi i) oint Tr(a^{-1} da)` over a single circle axis.
pub fn winding_number(family: &GroupFamily) -> Result<f64, ChernError> {
    let domain = family.domain();
    if domain.dim() != 1 || !domain.axis(0).is_periodic() {
        return Err(ChernError::InvalidDomain("winding numbers need a single periodic axis".into()));
    }
    let forms = ch_odd(family)?;
    Ok(forms[0].integrate(0).re)
}

/// The `d tau` coefficients of the pulled-back odd character at one base point,
/// integrated over the line: degree 0 and, for `d >= 2`, degree 2 components.
pub(crate) fn fibre_integrals(
    family: &SuspendedFamily,
    line: &LineJets,
    point: usize,
) -> Result<(C64, Vec<C64>), ChernError> {
    let grid = family.grid();
    let d = family.domain().dim();
    let pairs = increasing_tuples(d, 2);
    let k = grid.n_nodes();
    let mut deg0 = Vec::with_capacity(k);
    let mut deg2 = vec![Vec::with_capacity(k); pairs.len()];
    for j in 0..k {
        let inv = &line.inverses[j];
        let xt = inv * &line.dtau[j];
        deg0.push(odd_coefficient(0) * linalg::trace(&xt));
        if !pairs.is_empty() {
            let xy: Vec<CMatrix> = (0..d).map(|i| inv * &line.dy[i][j]).collect();
            for (c, pair) in pairs.iter().enumerate() {
                deg2[c].push(odd_component_from_x(&[&xt, &xy[pair[0]], &xy[pair[1]]]));
            }
        }
    }
    let q = |f: &[C64]| grid.quadrature(f).map_err(|e| ChernError::Quadrature { point, source: e });
    let zero = q(&deg0)?;
    let two = deg2.iter().map(|f| q(f)).collect::<Result<Vec<_>, _>>()?;
    Ok((zero, two))
}

pub(crate) fn fibre_forms(family: &SuspendedFamily) -> Result<Vec<FormField>, ChernError> {
    let domain = family.domain().clone();
    let results = (0..domain.len())
        .into_par_iter()
        .map(|p| {
            let line = family.line(p)?;
            fibre_integrals(family, &line, p)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut forms = vec![FormField::scalar(domain.clone(), results.iter().map(|r| r.0).collect())?];
    if domain.dim() >= 2 {
        forms.push(FormField::from_fn(domain, 2, |p| results[p].1.clone())?);
    }
    Ok(forms)
}

/// Even Chern character of a family of Schwartz loops: fibre integral of the
/// odd character, degrees 0 and (for `d >= 2`) 2.
pub fn ch_even(family: &SuspendedFamily) -> Result<Vec<FormField>, ChernError> {
    if family.class() != DecayClass::Schwartz {
        return Err(ChernError::WrongClass("ch_even needs Schwartz loops"));
    }
    fibre_forms(family)
}
