use serde::{Deserialize, Serialize};

use super::EtaError;
use crate::chern::{FormField, FormFieldJson, ParamDomain};
use crate::linalg::C64;

/// Even-degree eta form on a parameter domain; `forms[k]` has degree `2k`.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaValue {
    forms: Vec<FormField>,
}

impl EtaValue {
    pub fn new(forms: Vec<FormField>) -> Result<Self, EtaError> {
        let first = forms.first().ok_or_else(|| EtaError::Config("an eta value needs a zero form".into()))?;
        let domain = first.domain().clone();
        for (k, f) in forms.iter().enumerate() {
            if f.degree() != 2 * k || f.domain() != &domain {
                return Err(EtaError::Config(format!("form {k} has degree {} on a different layout", f.degree())));
            }
        }
        Ok(Self { forms })
    }

    pub fn domain(&self) -> &ParamDomain {
        self.forms[0].domain()
    }

    pub fn forms(&self) -> &[FormField] {
        &self.forms
    }

    pub fn zero_form(&self) -> &FormField {
        &self.forms[0]
    }

    /// Scalar values of the degree-0 part, one per grid point.
    pub fn zero_values(&self) -> Vec<C64> {
        self.forms[0].component_values(0)
    }

    pub fn degree(&self, degree: usize) -> Option<&FormField> {
        if degree % 2 == 1 {
            return None;
        }
        self.forms.get(degree / 2)
    }

    /// Largest imaginary part of the degree-0 part.
    pub fn zero_form_imag(&self) -> f64 {
        self.zero_values().iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Largest componentwise difference over the degrees both values carry.
    pub fn max_difference(&self, other: &Self) -> Result<f64, EtaError> {
        self.forms
            .iter()
            .zip(&other.forms)
            .map(|(a, b)| Ok(a.sub(b)?.max_abs()))
            .try_fold(0.0f64, |acc, r: Result<f64, EtaError>| r.map(|v| acc.max(v)))
    }

    pub fn add(&self, other: &Self) -> Result<Self, EtaError> {
        let forms = self.forms.iter().zip(&other.forms).map(|(a, b)| a.add(b)).collect::<Result<Vec<_>, _>>()?;
        Self::new(forms)
    }

    pub fn to_json(&self) -> EtaValueJson {
        let zero = self.zero_values();
        EtaValueJson {
            zero_form: ScalarFieldJson { shape: self.domain().shape(), values: zero.iter().map(|z| [z.re, z.im]).collect() },
            forms: self.forms.iter().map(FormField::to_json).collect(),
        }
    }

    pub fn from_json(domain: ParamDomain, json: &EtaValueJson) -> Result<Self, EtaError> {
        let forms = json
            .forms
            .iter()
            .map(|f| FormField::from_json(domain.clone(), f))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(forms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarFieldJson {
    pub shape: Vec<usize>,
    pub values: Vec<[f64; 2]>,
}

/// Form-field layout for every degree plus a plain block for the degree-0 values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaValueJson {
    pub zero_form: ScalarFieldJson,
    pub forms: Vec<FormFieldJson>,
}
