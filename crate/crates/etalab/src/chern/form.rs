use serde::{Deserialize, Serialize};

use super::domain::{difference_stencil, ParamDomain};
use super::ChernError;
use crate::linalg::{increasing_tuples, C64};

/// A `k`-form sampled on a parameter grid, stored on increasing axis tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct FormField {
    domain: ParamDomain,
    degree: usize,
    tuples: Vec<Vec<usize>>,
    /// `data[point * tuples.len() + component]`.
    data: Vec<C64>,
}

impl FormField {
    pub fn zeros(domain: ParamDomain, degree: usize) -> Result<Self, ChernError> {
        if degree > domain.dim() {
            return Err(ChernError::DegreeTooHigh { degree, dim: domain.dim() });
        }
        let tuples = increasing_tuples(domain.dim(), degree);
        let data = vec![C64::new(0.0, 0.0); domain.len() * tuples.len()];
        Ok(Self { domain, degree, tuples, data })
    }

    /// Builds a form from a per-point closure returning all components.
    pub fn from_fn(domain: ParamDomain, degree: usize, f: impl Fn(usize) -> Vec<C64>) -> Result<Self, ChernError> {
        let mut form = Self::zeros(domain, degree)?;
        let m = form.tuples.len();
        for p in 0..form.domain.len() {
            let comps = f(p);
            if comps.len() != m {
                return Err(ChernError::InvalidDomain(format!("expected {m} components, got {}", comps.len())));
            }
            form.data[p * m..(p + 1) * m].copy_from_slice(&comps);
        }
        Ok(form)
    }

    pub fn scalar(domain: ParamDomain, values: Vec<C64>) -> Result<Self, ChernError> {
        if values.len() != domain.len() {
            return Err(ChernError::InvalidDomain(format!("expected {} values, got {}", domain.len(), values.len())));
        }
        Ok(Self { tuples: vec![vec![]], degree: 0, data: values, domain })
    }

    pub fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn component_index(&self, tuple: &[usize]) -> Option<usize> {
        self.tuples.iter().position(|t| t == tuple)
    }

    pub fn get(&self, point: usize, component: usize) -> C64 {
        self.data[point * self.tuples.len() + component]
    }

    /// The component on `tuple`, or zero if the tuple is not stored.
    pub fn component(&self, point: usize, tuple: &[usize]) -> C64 {
        self.component_index(tuple).map_or(C64::new(0.0, 0.0), |c| self.get(point, c))
    }

    /// All values of one component across the grid.
    pub fn component_values(&self, component: usize) -> Vec<C64> {
        (0..self.domain.len()).map(|p| self.get(p, component)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self, ChernError> {
        if self.degree != other.degree || self.domain != other.domain {
            return Err(ChernError::InvalidDomain("forms live on different grids or degrees".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { data, ..self.clone() })
    }

    pub fn add(&self, other: &Self) -> Result<Self, ChernError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, ChernError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { data: self.data.iter().map(|z| z * s).collect(), ..self.clone() }
    }

    /// Riemann sum of a top-degree form over a fully periodic domain, or the
    /// plain grid sum times the cell volume otherwise.
    pub fn integrate(&self, component: usize) -> C64 {
        let vol = self.domain.cell_volume();
        self.component_values(component).iter().sum::<C64>() * vol
    }

    pub fn to_json(&self) -> FormFieldJson {
        FormFieldJson {
            degree: self.degree,
            axes: self.tuples.clone(),
            shape: self.domain.shape(),
            data: self.data.iter().flat_map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn from_json(domain: ParamDomain, json: &FormFieldJson) -> Result<Self, ChernError> {
        let mut form = Self::zeros(domain, json.degree)?;
        if json.shape != form.domain.shape() || json.axes != form.tuples || json.data.len() != 2 * form.data.len() {
            return Err(ChernError::InvalidDomain("form layout does not match the domain".into()));
        }
        for (dst, pair) in form.data.iter_mut().zip(json.data.chunks(2)) {
            *dst = C64::new(pair[0], pair[1]);
        }
        Ok(form)
    }
}

/// Serialized layout `{degree, axes, shape, data}` with `data` holding
/// interleaved real and imaginary parts, point-major.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FormFieldJson {
    pub degree: usize,
    pub axes: Vec<Vec<usize>>,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// Second-order difference exterior derivative; wraps on periodic axes.
pub fn exterior_derivative(form: &FormField) -> Result<FormField, ChernError> {
    let domain = form.domain.clone();
    let d = domain.dim();
    if form.degree >= d {
        return Err(ChernError::DegreeTooHigh { degree: form.degree + 1, dim: d });
    }
    let mut out = FormField::zeros(domain.clone(), form.degree + 1)?;
    let m = out.tuples.len();
    for p in 0..domain.len() {
        for (c, tuple) in out.tuples.clone().iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (pos, &axis) in tuple.iter().enumerate() {
                let rest: Vec<usize> = tuple.iter().enumerate().filter(|&(q, _)| q != pos).map(|(_, &a)| a).collect();
                let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                let comp = form.component_index(&rest).expect("sub-tuples of increasing tuples are stored");
                let deriv: C64 = difference_stencil(&domain, p, axis)
                    .into_iter()
                    .map(|(q, w)| form.get(q, comp) * w)
                    .sum();
                acc += deriv * sign;
            }
            out.data[p * m + c] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_one_form_is_closed() {
        let domain = ParamDomain::torus(&[8, 8]).unwrap();
        let f = FormField::from_fn(domain, 1, |_| vec![C64::new(1.0, 0.0), C64::new(-2.0, 0.5)]).unwrap();
        let df = exterior_derivative(&f).unwrap();
        assert_eq!(df.max_abs(), 0.0);
    }

    #[test]
    fn d_of_d_is_small() {
        let domain = ParamDomain::torus(&[32, 32]).unwrap();
        let f = FormField::scalar(
            domain.clone(),
            domain.points().map(|x| C64::new((x[0]).sin() * (2.0 * x[1]).cos(), 0.0)).collect(),
        )
        .unwrap();
        let ddf = exterior_derivative(&exterior_derivative(&f).unwrap()).unwrap();
        assert!(ddf.max_abs() < 1e-12);
    }

    #[test]
    fn top_degree_is_rejected() {
        let domain = ParamDomain::circle(8);
        let f = FormField::zeros(domain, 1).unwrap();
        assert!(matches!(exterior_derivative(&f), Err(ChernError::DegreeTooHigh { .. })));
    }

    #[test]
    fn json_roundtrip() {
        let domain = ParamDomain::torus(&[4, 5]).unwrap();
        let f = FormField::from_fn(domain.clone(), 1, |p| vec![C64::new(p as f64, 1.0), C64::new(0.0, -(p as f64))]).unwrap();
        let json = serde_json::to_string(&f.to_json()).unwrap();
        let back = FormField::from_json(domain, &serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, f);
    }
}
