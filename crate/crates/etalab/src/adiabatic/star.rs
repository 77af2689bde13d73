use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::element::EpsilonElement;
use super::AdiabaticError;
use crate::linalg::{self, CMatrix, C64, I};
use crate::opcore::MARGIN_FLOOR;
use crate::suspend::TauGrid;

/// Orientation of the first-order bracket in the truncated star product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bracket {
    /// `d_t a0 d_tau b0 - d_tau a0 d_t b0`.
    #[default]
    Td9,
    /// `d_t a0 d_tau b0 - d_tau a0 d_t a0`, kept for comparison.
    Verbatim,
}

impl std::str::FromStr for Bracket {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "td9" => Ok(Self::Td9),
            "verbatim" => Ok(Self::Verbatim),
            other => Err(format!("unknown bracket mode '{other}' (expected td9 or verbatim)")),
        }
    }
}

impl std::fmt::Display for Bracket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Td9 => "td9",
            Self::Verbatim => "verbatim",
        })
    }
}

fn check_pair(a: &EpsilonElement, b: &EpsilonElement) -> Result<(), AdiabaticError> {
    if a.grid() != b.grid() {
        return Err(AdiabaticError::Mismatch("elements live on different grids".into()));
    }
    if a.dim() != b.dim() {
        return Err(AdiabaticError::Mismatch(format!("matrix sizes {} and {}", a.dim(), b.dim())));
    }
    Ok(())
}

fn bracket_at(bracket: Bracket, at: &CMatrix, atau: &CMatrix, bt: &CMatrix, btau: &CMatrix) -> CMatrix {
    match bracket {
        Bracket::Td9 => at * btau - atau * bt,
        Bracket::Verbatim => at * btau - atau * at,
    }
}

/// `a * b` truncated at first order in `eps` (td9 bracket).
pub fn star_multiply(a: &EpsilonElement, b: &EpsilonElement) -> Result<EpsilonElement, AdiabaticError> {
    star_multiply_with(a, b, Bracket::Td9)
}

pub fn star_multiply_with(a: &EpsilonElement, b: &EpsilonElement, bracket: Bracket) -> Result<EpsilonElement, AdiabaticError> {
    check_pair(a, b)?;
    let (at, atau) = a.derivatives();
    let (bt, btau) = b.derivatives();
    let half_i = I * 0.5;
    let parts: Vec<(CMatrix, CMatrix, CMatrix, CMatrix)> = (0..a.grid().len())
        .into_par_iter()
        .map(|k| {
            let (a0, b0) = (&a.a0()[k], &b.a0()[k]);
            let c0 = a0 * b0;
            let c1 = a0 * &b.a1()[k] + &a.a1()[k] * b0 + bracket_at(bracket, &at[k], &atau[k], &bt[k], &btau[k]) * half_i;
            let ct = &at[k] * b0 + a0 * &bt[k];
            let ctau = &atau[k] * b0 + a0 * &btau[k];
            (c0, c1, ct, ctau)
        })
        .collect();
    let mul = |x: &[CMatrix], y: &[CMatrix]| -> Vec<CMatrix> { x.iter().zip(y).map(|(p, q)| p * q).collect() };
    let mut c0 = Vec::with_capacity(parts.len());
    let mut c1 = Vec::with_capacity(parts.len());
    let mut ct = Vec::with_capacity(parts.len());
    let mut ctau = Vec::with_capacity(parts.len());
    for (p, q, r, s) in parts {
        c0.push(p);
        c1.push(q);
        ct.push(r);
        ctau.push(s);
    }
    Ok(EpsilonElement::with_derivatives(
        a.grid().clone(),
        a.class().product(b.class()),
        c0,
        c1,
        mul(a.minus_slice(), b.minus_slice()),
        mul(a.boundary_slice(), b.boundary_slice()),
        a.unit() * b.unit(),
        (ct, ctau),
    ))
}

fn invert(m: &CMatrix, point: usize) -> Result<CMatrix, AdiabaticError> {
    let margin = linalg::min_singular_value(m);
    if !(margin > MARGIN_FLOOR) {
        return Err(AdiabaticError::SingularAt { point, margin });
    }
    linalg::inverse(m).ok_or(AdiabaticError::SingularAt { point, margin })
}

/// `a^{-1} = a0^{-1} - eps a0^{-1} (a1 + K) a0^{-1}` with
/// `K = (1/2i)(d_t a0 a0^{-1} d_tau a0 - d_tau a0 a0^{-1} d_t a0)`.
pub fn star_inverse(a: &EpsilonElement) -> Result<EpsilonElement, AdiabaticError> {
    if a.is_tangent() {
        return Err(AdiabaticError::Mismatch("tangent vectors have no star inverse".into()));
    }
    let (at, atau) = a.derivatives();
    let minus_half_i = I * -0.5;
    let parts = (0..a.grid().len())
        .into_par_iter()
        .map(|k| {
            let b0 = invert(&a.a0()[k], k)?;
            let kk = (&at[k] * &b0 * &atau[k] - &atau[k] * &b0 * &at[k]) * minus_half_i;
            let b1 = -(&b0 * (&a.a1()[k] + kk) * &b0);
            let bt = -(&b0 * &at[k] * &b0);
            let btau = -(&b0 * &atau[k] * &b0);
            Ok((b0, b1, bt, btau))
        })
        .collect::<Result<Vec<_>, AdiabaticError>>()?;
    let slice = |s: &[CMatrix], offset: usize| s.iter().enumerate().map(|(j, m)| invert(m, offset + j)).collect::<Result<Vec<_>, _>>();
    let len = a.grid().len();
    let minus = slice(a.minus_slice(), len)?;
    let plus = slice(a.boundary_slice(), len + a.grid().n_tau())?;
    let mut b0 = Vec::with_capacity(len);
    let mut b1 = Vec::with_capacity(len);
    let mut bt = Vec::with_capacity(len);
    let mut btau = Vec::with_capacity(len);
    for (p, q, r, s) in parts {
        b0.push(p);
        b1.push(q);
        bt.push(r);
        btau.push(s);
    }
    let class = match a.class() {
        super::EpsilonClass::DClass(j) => super::EpsilonClass::DClass(-j),
        c => c,
    };
    Ok(EpsilonElement::with_derivatives(a.grid().clone(), class, b0, b1, minus, plus, invert(a.unit(), 0)?, (bt, btau)))
}

/// Pointwise `Tr` of the `eps`-part of `a * b`.
fn eps_trace(a: &EpsilonElement, b: &EpsilonElement, bracket: Bracket) -> Vec<C64> {
    let (at, atau) = a.derivatives();
    let (bt, btau) = b.derivatives();
    (0..a.grid().len())
        .into_par_iter()
        .map(|k| {
            let plain = linalg::trace_product(&a.a0()[k], &b.a1()[k]) + linalg::trace_product(&a.a1()[k], &b.a0()[k]);
            let br = match bracket {
                Bracket::Td9 => linalg::trace_product(&at[k], &btau[k]) - linalg::trace_product(&atau[k], &bt[k]),
                Bracket::Verbatim => linalg::trace_product(&at[k], &btau[k]) - linalg::trace_product(&atau[k], &at[k]),
            };
            plain + br * (I * 0.5)
        })
        .collect()
}

/// `(1/2 pi) int int Tr a1 dt dtau`.
pub fn adiabatic_trace(a: &EpsilonElement) -> Result<C64, AdiabaticError> {
    let tr: Vec<C64> = a.a1().iter().map(linalg::trace).collect();
    Ok(a.grid().quadrature(&tr)? / (2.0 * PI))
}

/// `Tr_ad(a * b)` without forming the product.
pub fn trace_of_product(a: &EpsilonElement, b: &EpsilonElement, bracket: Bracket) -> Result<C64, AdiabaticError> {
    check_pair(a, b)?;
    Ok(a.grid().quadrature(&eps_trace(a, b, bracket))? / (2.0 * PI))
}

/// `Tr_ad(a * b - b * a)`.
pub fn commutator_trace(a: &EpsilonElement, b: &EpsilonElement, bracket: Bracket) -> Result<C64, AdiabaticError> {
    check_pair(a, b)?;
    let (ab, ba) = (eps_trace(a, b, bracket), eps_trace(b, a, bracket));
    let diff: Vec<C64> = ab.iter().zip(&ba).map(|(x, y)| x - y).collect();
    Ok(a.grid().quadrature(&diff)? / (2.0 * PI))
}

/// `(1/2 pi i) int Tr(d_tau a(tau) b(tau)) dtau` over one slice.
fn slice_pairing(grid: &TauGrid, a: &[CMatrix], b: &[CMatrix]) -> Result<C64, AdiabaticError> {
    let da = crate::suspend::map_entries(a, |line| grid.derivative_flat(line));
    let f: Vec<C64> = da.iter().zip(b).map(|(x, y)| linalg::trace_product(x, y)).collect();
    Ok(grid.quadrature(&f)? / (I * 2.0 * PI))
}

/// `(Tr_ad(a * b - b * a), boundary term)`.
///
/// The boundary term is `(1/2 pi i) int Tr(d_tau a0 b0) dtau` on the
/// `t = +inf` slice, minus the same pairing on the `t = -inf` slice; the
/// second one is nonzero only for pairs of index classes `j` and `-j`.
pub fn trace_defect(a: &EpsilonElement, b: &EpsilonElement) -> Result<(C64, C64), AdiabaticError> {
    let lhs = commutator_trace(a, b, Bracket::Td9)?;
    let grid = a.grid().tau();
    let plus = slice_pairing(grid, a.boundary_slice(), b.boundary_slice())?;
    let minus = slice_pairing(grid, a.minus_slice(), b.minus_slice())?;
    Ok((lhs, plus - minus))
}

/// `alpha(a)(da) = Tr_ad(a^{-1} * da)` for each direction.
pub fn alpha_schwartz(a: &EpsilonElement, directions: &[EpsilonElement]) -> Result<Vec<C64>, AdiabaticError> {
    let inv = star_inverse(a)?;
    directions.iter().map(|d| trace_of_product(&inv, d, Bracket::Td9)).collect()
}

/// `alpha~(a)(da) = (1/2) Tr_ad(a^{-1} * da + da * a^{-1})` for each direction.
pub fn alpha_tilde(a: &EpsilonElement, directions: &[EpsilonElement]) -> Result<Vec<C64>, AdiabaticError> {
    let inv = star_inverse(a)?;
    directions
        .iter()
        .map(|d| {
            check_pair(&inv, d)?;
            let (l, r) = (eps_trace(&inv, d, Bracket::Td9), eps_trace(d, &inv, Bracket::Td9));
            let f: Vec<C64> = l.iter().zip(&r).map(|(x, y)| (x + y) * 0.5).collect();
            Ok(a.grid().quadrature(&f)? / (2.0 * PI))
        })
        .collect()
}

/// `alpha` on the doubly Schwartz class and `alpha~` on the extended classes.
pub fn alpha_form(a: &EpsilonElement, directions: &[EpsilonElement]) -> Result<Vec<C64>, AdiabaticError> {
    if a.class().is_extended() {
        alpha_tilde(a, directions)
    } else {
        alpha_schwartz(a, directions)
    }
}
