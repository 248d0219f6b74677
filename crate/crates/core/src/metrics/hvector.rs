use serde::{Deserialize, Serialize};

use super::chart::ChartSpec;
use super::fields::CovectorField;
use super::spec::HVectorSpec;
use super::{build_covector_field, MetricFunction};
use crate::diffkit::{Jet, Real};
use crate::error::{GeometryError, Result};
use crate::fundamentals::{base_tensors, v_cov_deriv, BaseTensors};
use crate::tensor::{max_abs_matrix, Matrix, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HVectorFamily {
    /// `b_i = a_i`, constant in x and y.
    Constant,
    /// `b_i = a_i(x)` with `∂_j a_i` symmetric.
    Gradient,
    /// `b_i = c·l_i`
    Homothety,
    /// `b_i = a_i(x) + c·l_i`
    Mixed,
}

impl HVectorFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            HVectorFamily::Constant => "constant",
            HVectorFamily::Gradient => "gradient",
            HVectorFamily::Homothety => "homothety",
            HVectorFamily::Mixed => "mixed",
        }
    }
}

/// A covector field `b_i(x, y) = a_i(x) + c·l_i(x, y)`.
///
/// Every family satisfies `L ∂̇_j b_i = c h_ij`, so `ρ = c` is stored as a
/// constant.
#[derive(Clone, Debug, PartialEq)]
pub struct HVectorField {
    family: HVectorFamily,
    a: CovectorField,
    c: f64,
}

/// Value and first derivatives of a covector field at one point:
/// `dy[(i, r)] = ∂̇_r X_i` and `dx[(i, j)] = ∂_j X_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovectorJet {
    pub value: Vector,
    pub dy: Matrix,
    pub dx: Matrix,
}

impl HVectorField {
    pub fn constant(a: Vector) -> Self {
        HVectorField {
            family: HVectorFamily::Constant,
            a: CovectorField::constant(a),
            c: 0.0,
        }
    }

    pub fn gradient(a: CovectorField) -> Result<Self> {
        if !a.is_gradient() {
            return Err(GeometryError::InvalidParameter(
                "gradient family needs a symmetric slope".into(),
            ));
        }
        Ok(HVectorField {
            family: HVectorFamily::Gradient,
            a,
            c: 0.0,
        })
    }

    pub fn homothety(n: usize, c: f64) -> Self {
        HVectorField {
            family: HVectorFamily::Homothety,
            a: CovectorField::zero(n),
            c,
        }
    }

    pub fn mixed(a: CovectorField, c: f64) -> Self {
        HVectorField {
            family: HVectorFamily::Mixed,
            a,
            c,
        }
    }

    pub fn family(&self) -> HVectorFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn rho(&self) -> f64 {
        self.c
    }

    pub fn covector_part(&self) -> &CovectorField {
        &self.a
    }

    pub fn homothety_coefficient(&self) -> f64 {
        self.c
    }

    /// `β = b_i y^i = a_i(x) y^i + c·L`, given `L(x, y)` in the same scalar type.
    pub fn beta<T: Real>(&self, x: &[T], y: &[T], l: T) -> T {
        let mut b = self.a.contract(x, y);
        if self.c != 0.0 {
            b = b + l * self.c;
        }
        b
    }

    /// `b_i` given the base `l_i`.
    pub fn value(&self, x: &[f64], l: &Vector) -> Vector {
        self.a.at(x) + l * self.c
    }

    /// `b_i` with its x- and y-derivatives, from a jet of the base `L`
    /// carrying `dy2` and `dx_dy`.
    pub fn covector_jet(&self, x: &[f64], l_jet: &Jet) -> CovectorJet {
        let l = l_jet.dy();
        CovectorJet {
            value: self.value(x, l),
            dy: l_jet.dy2() * self.c,
            dx: self.a.jacobian() + l_jet.dx_dy().transpose() * self.c,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c == 0.0 && self.a.is_zero()
    }
}

/// Build an h-vector field of the requested family for use with `base`.
pub fn make_hvector(spec: &HVectorSpec, base: &MetricFunction) -> Result<HVectorField> {
    let n = crate::diffkit::ScalarField::dim(base);
    let covector = || -> Result<CovectorField> {
        match &spec.a {
            Some(a) => build_covector_field(a, n),
            None => Err(GeometryError::InvalidParameter(format!(
                "h-vector family {} requires `a`",
                spec.family.as_str()
            ))),
        }
    };
    let coefficient = || -> Result<f64> {
        match spec.c {
            Some(c) if c.is_finite() => Ok(c),
            Some(c) => Err(GeometryError::InvalidParameter(format!("c = {c} is not finite"))),
            None => Err(GeometryError::InvalidParameter(format!(
                "h-vector family {} requires `c`",
                spec.family.as_str()
            ))),
        }
    };
    let finite = |a: &CovectorField| -> Result<()> {
        if a.offset.iter().chain(a.slope.iter()).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(GeometryError::InvalidParameter("h-vector components must be finite".into()))
        }
    };
    match spec.family {
        HVectorFamily::Constant => {
            if spec.c.is_some() {
                return Err(GeometryError::InvalidParameter("constant family takes no `c`".into()));
            }
            let a = covector()?;
            finite(&a)?;
            if !a.is_constant() {
                return Err(GeometryError::InvalidParameter("constant family takes no slope".into()));
            }
            Ok(HVectorField::constant(a.offset))
        }
        HVectorFamily::Gradient => {
            if spec.c.is_some() {
                return Err(GeometryError::InvalidParameter("gradient family takes no `c`".into()));
            }
            let a = covector()?;
            finite(&a)?;
            HVectorField::gradient(a)
        }
        HVectorFamily::Homothety => {
            if spec.a.is_some() {
                return Err(GeometryError::InvalidParameter("homothety family takes no `a`".into()));
            }
            Ok(HVectorField::homothety(n, coefficient()?))
        }
        HVectorFamily::Mixed => {
            let a = covector()?;
            finite(&a)?;
            Ok(HVectorField::mixed(a, coefficient()?))
        }
    }
}

/// Worst residuals of the h-vector axioms over a sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HVectorReport {
    pub samples: usize,
    pub tol: f64,
    /// `max |L ∂̇_j b_i − ρ h_ij|`
    pub derivative_law: f64,
    /// `max |b_i|_k|` (v-covariant constancy)
    pub v_constancy: f64,
    /// `max |L C^h_ij b_h − ρ h_ij|`
    pub cartan_law: f64,
    /// `max |∂̇_k ρ|`
    pub rho_direction: f64,
    pub derivative_law_holds: bool,
    pub v_constancy_holds: bool,
    pub cartan_law_holds: bool,
    pub rho_direction_holds: bool,
}

/// Axiom residuals at one point.
pub(crate) fn hvector_residuals(
    b: &HVectorField,
    base: &BaseTensors,
) -> (f64, f64, f64) {
    let jet = b.covector_jet(base.x.as_slice(), &base.l_jet);
    let rho = b.rho();
    let derivative_law = max_abs_matrix(&(jet.dy.transpose() * base.l - &base.h * rho));
    let v_constancy = max_abs_matrix(&v_cov_deriv(&jet, base));
    let lcb = base.c_mixed.contract_first(&jet.value) * base.l;
    let cartan_law = max_abs_matrix(&(lcb - &base.h * rho));
    (derivative_law, v_constancy, cartan_law)
}

/// Check the h-vector axioms for `b` over base `L` on sampled points.
pub fn validate_hvector(
    base: &MetricFunction,
    b: &HVectorField,
    chart: &ChartSpec,
    tol: f64,
) -> Result<HVectorReport> {
    let points = chart.sample(|x, y| base.is_admissible(x, y))?;
    let mut report = HVectorReport {
        samples: points.len(),
        tol,
        derivative_law: 0.0,
        v_constancy: 0.0,
        cartan_law: 0.0,
        // ρ is a per-family constant, so its y-derivative vanishes identically
        rho_direction: 0.0,
        derivative_law_holds: false,
        v_constancy_holds: false,
        cartan_law_holds: false,
        rho_direction_holds: false,
    };
    for p in &points {
        let t = base_tensors(base, &p.x, &p.y)?;
        let (d, v, c) = hvector_residuals(b, &t);
        report.derivative_law = report.derivative_law.max(d);
        report.v_constancy = report.v_constancy.max(v);
        report.cartan_law = report.cartan_law.max(c);
    }
    report.derivative_law_holds = report.derivative_law < tol;
    report.v_constancy_holds = report.v_constancy < tol;
    report.cartan_law_holds = report.cartan_law < tol;
    report.rho_direction_holds = report.rho_direction < tol;
    Ok(report)
}
