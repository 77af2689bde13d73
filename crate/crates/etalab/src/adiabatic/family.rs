use std::f64::consts::PI;
use std::sync::Arc;

use super::bigrid::BiGrid;
use super::element::{EpsilonClass, EpsilonElement, IndexShiftElement};
use super::star::{alpha_tilde, star_multiply};
use super::AdiabaticError;
use crate::chern::{
    central_difference, ch_even, ch_odd, exterior_derivative, transgression_delta_odd_twisted, DecayClass, Field,
    FormField, MatrixFamily, ParamDomain, SuspendedFamily,
};
use crate::eta::universal_eta;
use crate::fixtures::{loop_angle, loop_angle_derivative, phase_element};
use crate::linalg::{self, CMatrix, C64, I, TWO_PI_I};
use crate::suspend::{map_entries, ramp, ramp_derivative, TauGrid};

const FD_STEP: f64 = 1e-5;

/// A family of star-group elements over a parameter domain.
///
/// `a0` and `a1` take `(y_1, .., y_d, t, tau)`; `plus` takes `(y, tau)` and
/// is the `t = +inf` slice.
#[derive(Clone)]
pub struct EpsilonFamily {
    domain: ParamDomain,
    grid: BiGrid,
    class: EpsilonClass,
    a0: Field,
    a1: Field,
    plus: Field,
}

impl std::fmt::Debug for EpsilonFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EpsilonFamily")
            .field("domain", &self.domain)
            .field("grid", &self.grid)
            .field("class", &self.class)
            .finish()
    }
}

fn partial_or_difference(f: &dyn MatrixFamily, x: &[f64], axis: usize) -> CMatrix {
    f.partial(x, axis).unwrap_or_else(|| central_difference(f, x, axis, FD_STEP * x[axis].abs().max(1.0)))
}

impl EpsilonFamily {
    pub fn new(domain: ParamDomain, grid: BiGrid, class: EpsilonClass, a0: Field, a1: Field, plus: Field) -> Result<Self, AdiabaticError> {
        let n = a0.size();
        if a1.size() != n || plus.size() != n {
            return Err(AdiabaticError::Mismatch("component fields have different sizes".into()));
        }
        Ok(Self { domain, grid, class, a0, a1, plus })
    }

    pub fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    pub fn grid(&self) -> &BiGrid {
        &self.grid
    }

    pub fn class(&self) -> EpsilonClass {
        self.class
    }

    pub fn size(&self) -> usize {
        self.a0.size()
    }

    pub fn on_domain(&self, domain: ParamDomain) -> Self {
        Self { domain, ..self.clone() }
    }

    /// The `t = +inf` slices as a family of Schwartz loops.
    pub fn boundary_family(&self) -> SuspendedFamily {
        SuspendedFamily::new(self.domain.clone(), self.grid.tau().clone(), self.plus.clone(), DecayClass::Schwartz)
    }

    fn minus(&self) -> Vec<CMatrix> {
        let n = self.size();
        let j = self.class.index();
        self.grid.tau().nodes().iter().map(|&tau| IndexShiftElement::power_at(n, j, tau)).collect()
    }

    fn at(y: &[f64], extra: &[f64]) -> Vec<f64> {
        let mut x = y.to_vec();
        x.extend_from_slice(extra);
        x
    }

    pub fn element(&self, idx: usize) -> Result<EpsilonElement, AdiabaticError> {
        let y = self.domain.point(idx);
        let g = &self.grid;
        let a0 = g.sample(|t, tau| self.a0.value(&Self::at(&y, &[t, tau])));
        let a1 = g.sample(|t, tau| self.a1.value(&Self::at(&y, &[t, tau])));
        let plus = g.tau().nodes().iter().map(|&tau| self.plus.value(&Self::at(&y, &[tau]))).collect();
        EpsilonElement::new(g.clone(), self.class, a0, a1, self.minus(), plus, linalg::identity(self.size()))
    }

    /// `d/dy_axis` of the element over `idx`.
    pub fn tangent(&self, idx: usize, axis: usize) -> Result<EpsilonElement, AdiabaticError> {
        let y = self.domain.point(idx);
        let g = &self.grid;
        let n = self.size();
        let d0 = g.sample(|t, tau| partial_or_difference(self.a0.as_ref(), &Self::at(&y, &[t, tau]), axis));
        let d1 = g.sample(|t, tau| partial_or_difference(self.a1.as_ref(), &Self::at(&y, &[t, tau]), axis));
        let plus = g
            .tau()
            .nodes()
            .iter()
            .map(|&tau| partial_or_difference(self.plus.as_ref(), &Self::at(&y, &[tau]), axis))
            .collect();
        EpsilonElement::tangent(g.clone(), self.class, d0, d1, vec![CMatrix::zeros(n, n); g.n_tau()], plus)
    }

    pub fn tangents(&self, idx: usize) -> Result<Vec<EpsilonElement>, AdiabaticError> {
        (0..self.domain.dim()).map(|k| self.tangent(idx, k)).collect()
    }
}

/// The connection form `alpha~` pulled back to the parameter domain.
pub fn alpha_field(family: &EpsilonFamily) -> Result<FormField, AdiabaticError> {
    let domain = family.domain().clone();
    let values = (0..domain.len())
        .map(|p| alpha_tilde(&family.element(p)?, &family.tangents(p)?))
        .collect::<Result<Vec<_>, AdiabaticError>>()?;
    Ok(FormField::from_fn(domain, 1, |p| values[p].clone())?)
}

/// `(d alpha~, 2 pi i (Ch_even)_2)` of the boundary family; they agree up
/// to the `O(h^2)` error of the exterior derivative.
pub fn curvature_check(family: &EpsilonFamily) -> Result<(FormField, FormField), AdiabaticError> {
    if family.domain().dim() != 2 {
        return Err(AdiabaticError::Mismatch("curvature checks run on 2-axis domains".into()));
    }
    let d_alpha = exterior_derivative(&alpha_field(family)?)?;
    let ch = ch_even(&family.boundary_family())?;
    Ok((d_alpha, ch[1].scale(TWO_PI_I)))
}

/// Values and directional derivatives of a Schwartz loop on a `tau`-grid.
#[derive(Debug, Clone)]
pub struct SliceJet {
    pub values: Vec<CMatrix>,
    pub directions: Vec<Vec<CMatrix>>,
}

impl SliceJet {
    /// The `t = +inf` slice of `a` with the slices of the tangents `da`.
    pub fn boundary(a: &EpsilonElement, da: &[EpsilonElement]) -> Self {
        Self {
            values: a.boundary_slice().to_vec(),
            directions: da.iter().map(|d| d.boundary_slice().to_vec()).collect(),
        }
    }
}

/// `delta(a, b) = -(1/4 pi i) int Tr(a^{-1} da d_tau b b^{-1} - db b^{-1} a^{-1} d_tau a) dtau`
/// for each direction.
pub fn delta_correction(grid: &TauGrid, a: &SliceJet, b: &SliceJet) -> Result<Vec<C64>, AdiabaticError> {
    if a.directions.len() != b.directions.len() {
        return Err(AdiabaticError::Mismatch("jets carry different numbers of directions".into()));
    }
    let inv = |v: &[CMatrix]| {
        v.iter()
            .enumerate()
            .map(|(j, m)| {
                linalg::inverse(m).ok_or(AdiabaticError::SingularAt { point: j, margin: linalg::min_singular_value(m) })
            })
            .collect::<Result<Vec<_>, _>>()
    };
    let (ai, bi) = (inv(&a.values)?, inv(&b.values)?);
    let dtau = |v: &[CMatrix]| map_entries(v, |line| grid.derivative_flat(line));
    let (at, bt) = (dtau(&a.values), dtau(&b.values));
    let factor = -1.0 / (4.0 * PI * I);
    a.directions
        .iter()
        .zip(&b.directions)
        .map(|(da, db)| {
            let f: Vec<C64> = (0..grid.n_nodes())
                .map(|j| {
                    let x = &ai[j] * &da[j] * &bt[j] * &bi[j];
                    let y = &db[j] * &bi[j] * &ai[j] * &at[j];
                    linalg::trace(&(x - y))
                })
                .collect();
            Ok(grid.quadrature(&f)? * factor)
        })
        .collect()
}

/// Both sides of `alpha~(ab)(da b + a db) = alpha~(a)(da) + alpha~(b)(db) + delta`.
#[derive(Debug, Clone)]
pub struct AdditivityCheck {
    pub product: Vec<C64>,
    pub left: Vec<C64>,
    pub right: Vec<C64>,
    pub delta: Vec<C64>,
}

impl AdditivityCheck {
    pub fn residual(&self) -> f64 {
        self.product
            .iter()
            .zip(&self.left)
            .zip(&self.right)
            .zip(&self.delta)
            .map(|(((p, l), r), d)| (p - l - r - d).norm())
            .fold(0.0, f64::max)
    }
}

pub fn alpha_additivity_check(
    a: &EpsilonElement,
    da: &[EpsilonElement],
    b: &EpsilonElement,
    db: &[EpsilonElement],
) -> Result<AdditivityCheck, AdiabaticError> {
    if da.len() != db.len() {
        return Err(AdiabaticError::Mismatch("direction counts differ".into()));
    }
    let ab = star_multiply(a, b)?;
    let dab = da
        .iter()
        .zip(db)
        .map(|(x, y)| {
            let (l, r) = (star_multiply(x, b)?, star_multiply(a, y)?);
            Ok(l.lerp(&r, 0.5)?.scaled(2.0))
        })
        .collect::<Result<Vec<_>, AdiabaticError>>()?;
    Ok(AdditivityCheck {
        product: alpha_tilde(&ab, &dab)?,
        left: alpha_tilde(a, da)?,
        right: alpha_tilde(b, db)?,
        delta: delta_correction(a.grid().tau(), &SliceJet::boundary(a, da), &SliceJet::boundary(b, db))?,
    })
}

/// `s^j(tau) + r(t) (l(y, tau) - s^j(tau))` over `(y, t, tau)`: a lift of the
/// loop family `l` to the index class `j`.
struct LoopLift {
    target: Field,
    n: usize,
    j: i32,
}

impl LoopLift {
    fn shift(&self, tau: f64) -> (CMatrix, CMatrix) {
        let (v, d) = phase_element(self.n, self.j as f64 * loop_angle(tau));
        (v, d * C64::new(self.j as f64 * loop_angle_derivative(tau), 0.0))
    }

    fn split(x: &[f64]) -> (Vec<f64>, f64) {
        let d = x.len() - 2;
        let mut y = x[..d].to_vec();
        y.push(x[d + 1]);
        (y, x[d])
    }
}

impl MatrixFamily for LoopLift {
    fn size(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> CMatrix {
        let (ytau, t) = Self::split(x);
        let s = self.shift(ytau[ytau.len() - 1]).0;
        &s + (self.target.value(&ytau) - &s) * C64::new(ramp(t), 0.0)
    }
    fn partial(&self, x: &[f64], axis: usize) -> Option<CMatrix> {
        let (ytau, t) = Self::split(x);
        let d = x.len() - 2;
        let tau = ytau[d];
        let (s, ds) = self.shift(tau);
        let r = C64::new(ramp(t), 0.0);
        let target_partial = |k: usize| partial_or_difference(self.target.as_ref(), &ytau, k);
        Some(if axis < d {
            target_partial(axis) * r
        } else if axis == d {
            (self.target.value(&ytau) - s) * C64::new(ramp_derivative(t), 0.0)
        } else {
            &ds + (target_partial(d) - &ds) * r
        })
    }
    fn has_partials(&self) -> bool {
        true
    }
}

/// Extended family with `t = +inf` slice `loops` and `t = -inf` slice `s^j`.
pub fn lift_loop_family(domain: ParamDomain, grid: BiGrid, loops: Field, j: i32) -> Result<EpsilonFamily, AdiabaticError> {
    let n = loops.size();
    let class = if j == 0 { EpsilonClass::HalfOpen } else { EpsilonClass::DClass(j) };
    let a0: Field = Arc::new(LoopLift { target: loops.clone(), n, j });
    let a1 = crate::chern::constant(CMatrix::zeros(n, n));
    EpsilonFamily::new(domain, grid, class, a0, a1, loops)
}

/// Result of the gerbe check on a fibre product of half-open families.
#[derive(Debug, Clone)]
pub struct GerbeCheck {
    /// `d((1/2 pi i) alpha~ - delta'_odd)`: curvature of the modified connection.
    pub curvature: FormField,
    /// `eta~_2(a) - eta~_2(b)`.
    pub b_field: FormField,
}

impl GerbeCheck {
    pub fn residual(&self) -> Result<f64, AdiabaticError> {
        Ok(self.curvature.sub(&self.b_field)?.max_abs())
    }
}

/// Curvature of `m~^* nabla_ad - delta'_odd` against the B-field difference,
/// for half-open families `a`, `b` with equal limits and a lift of `a b^{-1}`.
pub fn gerbe_bfield_check(a: &SuspendedFamily, b: &SuspendedFamily, lift: &EpsilonFamily) -> Result<GerbeCheck, AdiabaticError> {
    if a.domain() != b.domain() || a.domain() != lift.domain() || a.grid() != b.grid() {
        return Err(AdiabaticError::Mismatch("fibre-product families must share domain and grid".into()));
    }
    if a.domain().dim() != 2 {
        return Err(AdiabaticError::Mismatch("gerbe checks run on 2-axis domains".into()));
    }
    let domain = a.domain();
    let tau_end = *a.grid().nodes().last().expect("non-empty grid");
    let mut mismatch = 0.0f64;
    for y in domain.points() {
        let x = [y.as_slice(), &[tau_end]].concat();
        mismatch = mismatch.max(linalg::max_abs(&(a.field().value(&x) - b.field().value(&x))));
        for &tau in lift.grid().tau().nodes() {
            let x = [y.as_slice(), &[tau]].concat();
            let ab = a.field().value(&x) * linalg::inverse(&b.field().value(&x)).ok_or(AdiabaticError::NotInvertible { margin: 0.0 })?;
            mismatch = mismatch.max(linalg::max_abs(&(ab - lift.plus.value(&x))));
        }
    }
    if mismatch > 1e-10 {
        return Err(AdiabaticError::FibreProduct { mismatch });
    }
    let delta = transgression_delta_odd_twisted(a, b)?;
    let connection = alpha_field(lift)?.scale(1.0 / TWO_PI_I).sub(&delta)?;
    let curvature = exterior_derivative(&connection)?;
    let eta = |f: &SuspendedFamily| -> Result<FormField, AdiabaticError> { Ok(universal_eta(f)?.forms()[1].clone()) };
    let b_field = eta(a)?.sub(&eta(b)?)?;
    Ok(GerbeCheck { curvature, b_field })
}

/// `(d eta~_2, R_inf^* (Ch_odd)_3)` for a half-open family on a 3-axis domain.
pub fn curving_check(a: &SuspendedFamily) -> Result<(FormField, FormField), AdiabaticError> {
    if a.domain().dim() != 3 {
        return Err(AdiabaticError::Mismatch("curving checks run on 3-axis domains".into()));
    }
    let d_eta = exterior_derivative(&universal_eta(a)?.forms()[1])?;
    let ch = ch_odd(&a.limit_family())?;
    Ok((d_eta, ch[1].clone()))
}
