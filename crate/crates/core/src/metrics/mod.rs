//! The metric zoo, h-vector families and the exponential change
//! `*L = L·exp(β/L)` as an evaluable metric function.

mod chart;
mod fields;
mod hvector;
mod spec;

pub use chart::{ChartSpec, SamplePoint};
pub use fields::{CovectorField, MatrixField};
pub use hvector::{
    make_hvector, validate_hvector, CovectorJet, HVectorFamily, HVectorField, HVectorReport,
};
pub use spec::{CovectorFieldSpec, HVectorSpec, MatrixFieldSpec, MetricKindName, MetricSpec};

use crate::diffkit::{jet_eval, Real, ScalarField};
use crate::error::{GeometryError, Result};
use crate::tensor::{Matrix, Vector};

/// Largest `|β/L|` accepted before the exponential is considered overflowing.
pub const TAU_LIMIT: f64 = 50.0;

/// Directions with `det g` at or below this are rejected as inadmissible.
pub const DET_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum MetricKind {
    Euclidean,
    /// `α = sqrt(a_ij(x) y^i y^j)`
    Riemannian { alpha: MatrixField },
    /// `α + β`
    Randers { alpha: MatrixField, beta: CovectorField },
    /// `α² / β`
    Kropina { alpha: MatrixField, beta: CovectorField },
    /// `α² / (α − β)`
    Matsumoto { alpha: MatrixField, beta: CovectorField },
    /// `L·exp(β/L)` with `β = b_i(x, y) y^i`
    HExp {
        base: Box<MetricFunction>,
        hvector: HVectorField,
    },
}

/// A fundamental function `L(x, y)`, positively 1-homogeneous in `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricFunction {
    dim: usize,
    kind: MetricKind,
}

fn one_form<T: Real>(beta: &CovectorField, x: &[T], y: &[T]) -> T {
    beta.contract(x, y)
}

impl MetricFunction {
    pub fn euclidean(dim: usize) -> Self {
        MetricFunction {
            dim,
            kind: MetricKind::Euclidean,
        }
    }

    pub fn riemannian(alpha: MatrixField) -> Self {
        MetricFunction {
            dim: alpha.dim(),
            kind: MetricKind::Riemannian { alpha },
        }
    }

    pub fn randers(alpha: MatrixField, beta: CovectorField) -> Result<Self> {
        check_dims(&alpha, &beta)?;
        Ok(MetricFunction {
            dim: alpha.dim(),
            kind: MetricKind::Randers { alpha, beta },
        })
    }

    pub fn kropina(alpha: MatrixField, beta: CovectorField) -> Result<Self> {
        check_dims(&alpha, &beta)?;
        Ok(MetricFunction {
            dim: alpha.dim(),
            kind: MetricKind::Kropina { alpha, beta },
        })
    }

    pub fn matsumoto(alpha: MatrixField, beta: CovectorField) -> Result<Self> {
        check_dims(&alpha, &beta)?;
        Ok(MetricFunction {
            dim: alpha.dim(),
            kind: MetricKind::Matsumoto { alpha, beta },
        })
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        match &self.kind {
            MetricKind::Euclidean => "euclidean".into(),
            MetricKind::Riemannian { .. } => "riemannian".into(),
            MetricKind::Randers { .. } => "randers".into(),
            MetricKind::Kropina { .. } => "kropina".into(),
            MetricKind::Matsumoto { .. } => "matsumoto".into(),
            MetricKind::HExp { base, hvector } => {
                format!("hexp({}, {})", base.name(), hvector.family().as_str())
            }
        }
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.eval(x, y)
    }

    /// `L > 0` and `det g > DET_FLOOR` at `(x, y)`.
    pub fn is_admissible(&self, x: &[f64], y: &[f64]) -> bool {
        match jet_eval(&Energy(self), x, y, 2, false) {
            Ok(jet) => {
                let l = match self.value(x, y) {
                    Ok(l) => l,
                    Err(_) => return false,
                };
                l > 0.0 && l.is_finite() && jet.dy2().determinant() > DET_FLOOR
            }
            Err(_) => false,
        }
    }
}

fn check_dims(alpha: &MatrixField, beta: &CovectorField) -> Result<()> {
    if alpha.dim() != beta.dim() {
        return Err(GeometryError::InvalidParameter(format!(
            "alpha has dimension {} but the one-form has {}",
            alpha.dim(),
            beta.dim()
        )));
    }
    Ok(())
}

impl ScalarField for MetricFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval<T: Real>(&self, x: &[T], y: &[T]) -> Result<T> {
        Ok(match &self.kind {
            MetricKind::Euclidean => {
                let mut q = T::constant(0.0);
                for yi in y {
                    q = q + *yi * *yi;
                }
                q.sqrt()
            }
            MetricKind::Riemannian { alpha } => alpha.quadratic(x, y).sqrt(),
            MetricKind::Randers { alpha, beta } => {
                alpha.quadratic(x, y).sqrt() + one_form(beta, x, y)
            }
            MetricKind::Kropina { alpha, beta } => alpha.quadratic(x, y) / one_form(beta, x, y),
            MetricKind::Matsumoto { alpha, beta } => {
                let q = alpha.quadratic(x, y);
                q / (q.sqrt() - one_form(beta, x, y))
            }
            MetricKind::HExp { base, hvector } => {
                let l = base.eval(x, y)?;
                let tau = hvector.beta(x, y, l) / l;
                let t = tau.value();
                if t.abs() > TAU_LIMIT {
                    return Err(GeometryError::ChangeOverflow {
                        tau: t.abs(),
                        limit: TAU_LIMIT,
                    });
                }
                l * tau.exp()
            }
        })
    }
}

/// The energy `½ L²`, whose y-Hessian is the metric tensor.
#[derive(Clone, Copy, Debug)]
pub struct Energy<'a>(pub &'a MetricFunction);

impl ScalarField for Energy<'_> {
    fn dim(&self) -> usize {
        self.0.dim
    }

    fn eval<T: Real>(&self, x: &[T], y: &[T]) -> Result<T> {
        let l = self.0.eval(x, y)?;
        Ok(l * l * 0.5)
    }
}

/// The exponential change `*L = L·exp(β/L)` with `β = b_i(x, y) y^i`.
pub fn hexp_apply(base: &MetricFunction, hvector: &HVectorField) -> Result<MetricFunction> {
    if hvector.dim() != base.dim {
        return Err(GeometryError::InvalidParameter(format!(
            "h-vector dimension {} does not match metric dimension {}",
            hvector.dim(),
            base.dim
        )));
    }
    Ok(MetricFunction {
        dim: base.dim,
        kind: MetricKind::HExp {
            base: Box::new(base.clone()),
            hvector: hvector.clone(),
        },
    })
}

fn matrix_from_rows(rows: &[Vec<f64>], n: usize, what: &str) -> Result<Matrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(GeometryError::InvalidParameter(format!("{what} must be {n}x{n}")));
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn vector_of(v: &[f64], n: usize, what: &str) -> Result<Vector> {
    if v.len() != n {
        return Err(GeometryError::InvalidParameter(format!(
            "{what} must have {n} components, got {}",
            v.len()
        )));
    }
    Ok(Vector::from_column_slice(v))
}

pub(crate) fn build_matrix_field(spec: &MatrixFieldSpec, n: usize) -> Result<MatrixField> {
    let matrix = match &spec.matrix {
        Some(rows) => matrix_from_rows(rows, n, "alpha.matrix")?,
        None => Matrix::identity(n, n),
    };
    match &spec.conformal {
        Some(s) => MatrixField::new_conformal(matrix, vector_of(s, n, "alpha.conformal")?),
        None => MatrixField::new_constant(matrix),
    }
}

pub(crate) fn build_covector_field(spec: &CovectorFieldSpec, n: usize) -> Result<CovectorField> {
    let offset = vector_of(&spec.offset, n, "covector offset")?;
    match &spec.slope {
        Some(rows) => CovectorField::affine(offset, matrix_from_rows(rows, n, "covector slope")?),
        None => Ok(CovectorField::constant(offset)),
    }
}

/// `a^ij(x) β_i β_j` at `x`.
fn one_form_norm2(alpha: &MatrixField, beta: &CovectorField, x: &[f64]) -> Result<f64> {
    let inv = alpha.at(x).try_inverse().ok_or_else(|| GeometryError::InadmissibleMetric {
        x: x.to_vec(),
        reason: "alpha is singular".into(),
    })?;
    let b = beta.at(x);
    Ok((b.transpose() * inv * &b)[(0, 0)])
}

/// Build a metric from its specification, checking admissibility at the
/// given probe positions.
pub fn make_metric(spec: &MetricSpec, probes: &[Vec<f64>]) -> Result<MetricFunction> {
    let n = spec.dim;
    if n < 2 {
        return Err(GeometryError::InvalidParameter(format!("dimension must be >= 2, got {n}")));
    }
    for p in probes {
        if p.len() != n {
            return Err(GeometryError::InvalidParameter(format!(
                "probe {p:?} does not have {n} components"
            )));
        }
    }
    let alpha = || -> Result<MatrixField> {
        match &spec.alpha {
            Some(a) => build_matrix_field(a, n),
            None => Ok(MatrixField::identity(n)),
        }
    };
    let beta = || -> Result<CovectorField> {
        match &spec.beta {
            Some(b) => build_covector_field(b, n),
            None => Err(GeometryError::InvalidParameter(format!(
                "metric kind {:?} requires a one-form `beta`",
                spec.kind
            ))),
        }
    };
    let no_extras = |what: &str| -> Result<()> {
        if spec.beta.is_some() {
            return Err(GeometryError::InvalidParameter(format!("{what} metric takes no `beta`")));
        }
        Ok(())
    };

    let bound = |alpha: &MatrixField, beta: &CovectorField, limit: f64| -> Result<()> {
        for p in probes {
            let norm = one_form_norm2(alpha, beta, p)?.sqrt();
            if !(norm < limit) {
                return Err(GeometryError::InadmissibleMetric {
                    x: p.clone(),
                    reason: format!("one-form norm {norm} is not below {limit}"),
                });
            }
        }
        Ok(())
    };

    match spec.kind {
        MetricKindName::Euclidean => {
            no_extras("euclidean")?;
            if spec.alpha.is_some() {
                return Err(GeometryError::InvalidParameter("euclidean metric takes no `alpha`".into()));
            }
            Ok(MetricFunction::euclidean(n))
        }
        MetricKindName::Riemannian => {
            no_extras("riemannian")?;
            Ok(MetricFunction::riemannian(alpha()?))
        }
        MetricKindName::Randers => {
            let (a, b) = (alpha()?, beta()?);
            bound(&a, &b, 1.0)?;
            MetricFunction::randers(a, b)
        }
        MetricKindName::Kropina => {
            let (a, b) = (alpha()?, beta()?);
            for p in probes {
                if one_form_norm2(&a, &b, p)? <= 0.0 {
                    return Err(GeometryError::InadmissibleMetric {
                        x: p.clone(),
                        reason: "kropina one-form vanishes".into(),
                    });
                }
            }
            MetricFunction::kropina(a, b)
        }
        MetricKindName::Matsumoto => {
            let (a, b) = (alpha()?, beta()?);
            bound(&a, &b, 0.5)?;
            MetricFunction::matsumoto(a, b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffkit::jet_eval;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    #[test]
    fn zoo_values() {
        let e = MetricFunction::euclidean(2);
        assert_eq!(e.value(&[1.0, 1.0], &[3.0, 4.0]).unwrap(), 5.0);

        let r = MetricFunction::randers(MatrixField::identity(2), CovectorField::constant(v(&[0.3, 0.0])))
            .unwrap();
        assert!((r.value(&[0.0, 0.0], &[1.0, 0.0]).unwrap() - 1.3).abs() < 1e-15);

        let c = MetricFunction::riemannian(MatrixField::conformal_euclidean(v(&[1.0, 0.0])));
        assert_eq!(c.value(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);

        let k = MetricFunction::kropina(MatrixField::identity(2), CovectorField::constant(v(&[1.0, 0.0])))
            .unwrap();
        assert!((k.value(&[0.0, 0.0], &[1.0, 1.0]).unwrap() - 2.0).abs() < 1e-15);

        let m = MetricFunction::matsumoto(MatrixField::identity(2), CovectorField::constant(v(&[0.2, 0.0])))
            .unwrap();
        assert!((m.value(&[0.0, 0.0], &[1.0, 0.0]).unwrap() - 1.25).abs() < 1e-15);
    }

    #[test]
    fn homogeneity_over_the_zoo() {
        let alpha = MatrixField::new_conformal(
            Matrix::from_row_slice(2, 2, &[1.2, 0.1, 0.1, 0.8]),
            v(&[0.3, -0.2]),
        )
        .unwrap();
        let beta = CovectorField::affine(v(&[0.2, 0.1]), Matrix::from_row_slice(2, 2, &[0.1, 0.0, 0.05, 0.1]))
            .unwrap();
        let zoo = [
            MetricFunction::euclidean(2),
            MetricFunction::riemannian(alpha.clone()),
            MetricFunction::randers(alpha.clone(), beta.clone()).unwrap(),
            MetricFunction::kropina(alpha.clone(), beta.clone()).unwrap(),
            MetricFunction::matsumoto(alpha.clone(), beta.clone()).unwrap(),
        ];
        let (x, y) = ([0.2, -0.1], [0.8, 0.6]);
        for m in &zoo {
            let base = m.value(&x, &y).unwrap();
            for lambda in [0.5, 2.0, 7.0] {
                let scaled: Vec<f64> = y.iter().map(|c| c * lambda).collect();
                let l = m.value(&x, &scaled).unwrap();
                assert!((l - lambda * base).abs() < 1e-13 * lambda * base.abs(), "{}", m.name());
            }
        }
    }

    #[test]
    fn make_metric_checks_randers_bound() {
        let spec = MetricSpec {
            kind: MetricKindName::Randers,
            dim: 2,
            alpha: None,
            beta: Some(CovectorFieldSpec {
                offset: vec![0.5, 0.0],
                slope: Some(vec![vec![1.0, 0.0], vec![0.0, 0.0]]),
            }),
        };
        assert!(make_metric(&spec, &[vec![0.0, 0.0]]).is_ok());
        let err = make_metric(&spec, &[vec![0.0, 0.0], vec![0.6, 0.0]]).unwrap_err();
        assert!(matches!(err, GeometryError::InadmissibleMetric { x, .. } if x == vec![0.6, 0.0]));
    }

    #[test]
    fn make_metric_rejects_malformed_specs() {
        let spec = MetricSpec {
            kind: MetricKindName::Riemannian,
            dim: 2,
            alpha: Some(MatrixFieldSpec {
                matrix: Some(vec![vec![1.0, 0.0]]),
                conformal: None,
            }),
            beta: None,
        };
        assert!(make_metric(&spec, &[]).is_err());
        let spec = MetricSpec {
            kind: MetricKindName::Randers,
            dim: 2,
            alpha: None,
            beta: None,
        };
        assert!(make_metric(&spec, &[]).is_err());
        let spec = MetricSpec {
            kind: MetricKindName::Euclidean,
            dim: 1,
            alpha: None,
            beta: None,
        };
        assert!(make_metric(&spec, &[]).is_err());
    }

    #[test]
    fn hexp_of_zero_vector_is_identity() {
        let base = MetricFunction::randers(
            MatrixField::conformal_euclidean(v(&[0.4, 0.1])),
            CovectorField::constant(v(&[0.2, -0.1])),
        )
        .unwrap();
        let b = HVectorField::constant(Vector::zeros(2));
        let star = hexp_apply(&base, &b).unwrap();
        let (x, y) = ([0.3, 0.2], [-0.4, 1.1]);
        assert_eq!(star.value(&x, &y).unwrap(), base.value(&x, &y).unwrap());
    }

    #[test]
    fn hexp_values() {
        let e = MetricFunction::euclidean(2);
        let b = HVectorField::constant(v(&[0.1, 0.0]));
        let star = hexp_apply(&e, &b).unwrap();
        assert!((star.value(&[0.0, 0.0], &[1.0, 0.0]).unwrap() - 0.1f64.exp()).abs() < 1e-15);
        assert!((star.value(&[0.0, 0.0], &[1.0, 0.0]).unwrap() - 1.105171).abs() < 1e-6);

        let r = MetricFunction::randers(MatrixField::identity(2), CovectorField::constant(v(&[0.3, 0.0])))
            .unwrap();
        let h = HVectorField::homothety(2, 0.2);
        let star = hexp_apply(&r, &h).unwrap();
        let (x, y) = ([0.1, 0.1], [0.3, -0.9]);
        let ratio = star.value(&x, &y).unwrap() / r.value(&x, &y).unwrap();
        assert!((ratio - 0.2f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn hexp_overflow() {
        let e = MetricFunction::euclidean(2);
        let b = HVectorField::constant(v(&[60.0, 0.0]));
        let star = hexp_apply(&e, &b).unwrap();
        assert!(matches!(
            star.value(&[0.0, 0.0], &[1.0, 0.0]),
            Err(GeometryError::ChangeOverflow { .. })
        ));
    }

    #[test]
    fn hexp_preserves_homogeneity() {
        let base = MetricFunction::riemannian(MatrixField::conformal_euclidean(v(&[1.0, 0.0])));
        let b = HVectorField::mixed(
            CovectorField::affine(v(&[0.1, 0.0]), Matrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, 0.1]))
                .unwrap(),
            0.15,
        );
        let star = hexp_apply(&base, &b).unwrap();
        let (x, y) = ([0.2, -0.3], [0.6, 0.8]);
        let l = star.value(&x, &y).unwrap();
        for lambda in [0.5, 2.0, 7.0] {
            let s: Vec<f64> = y.iter().map(|c| c * lambda).collect();
            assert!((star.value(&x, &s).unwrap() - lambda * l).abs() < 1e-13 * lambda);
        }
        // Euler identity on the changed metric through the jet
        let j = jet_eval(&star, &x, &y, 1, false).unwrap();
        let euler: f64 = (0..2).map(|k| y[k] * j.dy()[k]).sum();
        assert!((euler - l).abs() < 1e-14);
    }

    #[test]
    fn admissibility() {
        let k = MetricFunction::kropina(MatrixField::identity(2), CovectorField::constant(v(&[1.0, 0.0])))
            .unwrap();
        assert!(k.is_admissible(&[0.0, 0.0], &[1.0, 0.2]));
        assert!(!k.is_admissible(&[0.0, 0.0], &[-1.0, 0.2]));
    }
}
