use super::{EtaError, EtaValue};
use crate::chern::{fibre_forms, odd_coefficient, SuspendedFamily};
use crate::linalg::{self, C64};
use crate::opcore::fredholm_det;
use crate::suspend::{restrict_infinity, HalfOpenElement};

/// Fibre integral of the pulled-back odd character over a family of
/// half-open elements (Schwartz loops are a special case).
pub fn universal_eta(family: &SuspendedFamily) -> Result<EtaValue, EtaError> {
    EtaValue::new(fibre_forms(family)?)
}

/// `(1/2 pi i) int Tr(a^{-1} da/dtau) dtau` of a single element.
pub fn universal_eta_zero(a: &HalfOpenElement) -> Result<C64, EtaError> {
    let values = a.values();
    let derivative = a.derivative();
    let integrand = values
        .iter()
        .zip(&derivative)
        .map(|(v, d)| {
            let inv = linalg::inverse(v).ok_or(EtaError::NotInvertible { margin: linalg::min_singular_value(v) })?;
            Ok(odd_coefficient(0) * linalg::trace_product(&inv, d))
        })
        .collect::<Result<Vec<_>, EtaError>>()?;
    Ok(a.grid().quadrature(&integrand)?)
}

/// `(exp(2 pi i eta~^0(a)), det(R_inf a))`; the two agree for every path.
pub fn fredholm_relation_check(a: &HalfOpenElement) -> Result<(C64, C64), EtaError> {
    let eta = universal_eta_zero(a)?;
    let lhs = (linalg::TWO_PI_I * eta).exp();
    Ok((lhs, fredholm_det(&restrict_infinity(a))))
}
