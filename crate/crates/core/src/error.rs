use thiserror::Error;

/// Failures raised while evaluating metrics, tensors and connection quantities.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("evaluation-domain error: non-finite value at x = {x:?}, y = {y:?}")]
    EvaluationDomain { x: Vec<f64>, y: Vec<f64> },

    #[error("inadmissible-metric error at x = {x:?}: {reason}")]
    InadmissibleMetric { x: Vec<f64>, reason: String },

    #[error("change-overflow error: |beta / L| = {tau} exceeds {limit}")]
    ChangeOverflow { tau: f64, limit: f64 },

    #[error("degenerate-metric error: |det g| = {det:e} at x = {x:?}, y = {y:?}")]
    DegenerateMetric { det: f64, x: Vec<f64>, y: Vec<f64> },

    #[error("change-singularity error: nu = {nu:e}, m^2 + nu = {divisor:e}")]
    ChangeSingularity { nu: f64, divisor: f64 },

    #[error("sherman-morrison-singularity error: 1 + n_k n^k = {denominator:e}")]
    ShermanMorrisonSingularity { denominator: f64 },

    #[error("insufficient-trace error: {0}")]
    InsufficientTrace(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;
