use serde::{Deserialize, Serialize};

use super::hvector::HVectorFamily;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKindName {
    Euclidean,
    Riemannian,
    Randers,
    Kropina,
    Matsumoto,
}

/// `a_ij(x) = exp(2 s·x) A_ij`; `matrix` defaults to the identity and the
/// field is constant when `conformal` is absent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFieldSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformal: Option<Vec<f64>>,
}

/// `a_i(x) = offset_i + slope_ij x^j`
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovectorFieldSpec {
    pub offset: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub kind: MetricKindName,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<MatrixFieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<CovectorFieldSpec>,
}

/// `a` is the covector part (constant, gradient and mixed families) and `c`
/// the homothety coefficient (homothety and mixed families).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HVectorSpec {
    pub family: HVectorFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<CovectorFieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}
