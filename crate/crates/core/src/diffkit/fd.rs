//! Central finite differences as a diagnostic cross-check of [`jet_eval`].

use super::jet::{jet_eval, ScalarField};
use crate::error::Result;
use crate::tensor::{max_abs_diff, max_abs_slice, Matrix, Vector};

/// Agreement between exact jets and central differences at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct FdReport {
    pub step: f64,
    /// Worst relative deviation over `dy` and `dx`.
    pub first_order: f64,
    /// Worst relative deviation over `dy2` and `dx_dy`.
    pub second_order: f64,
    /// The step is so small that rounding noise dominates the second-order stencil.
    pub step_underflow: bool,
}

impl FdReport {
    pub fn max_deviation(&self) -> f64 {
        self.first_order.max(self.second_order)
    }
}

fn relative(exact: &[f64], approx: &[f64]) -> f64 {
    max_abs_diff(exact, approx) / max_abs_slice(exact).max(1.0)
}

/// Compare `jet_eval(f, x, y, 2, true)` against central differences with the
/// given step. Evaluation failures (kinks, domain exits) propagate as errors.
pub fn fd_check<F: ScalarField>(f: &F, x: &[f64], y: &[f64], step: f64) -> Result<FdReport> {
    let n = f.dim();
    let jet = jet_eval(f, x, y, 2, true)?;
    let h = step;

    let at = |dx: &[(usize, f64)], dy: &[(usize, f64)]| -> Result<f64> {
        let mut xp = x.to_vec();
        let mut yp = y.to_vec();
        for &(a, d) in dx {
            xp[a] += d;
        }
        for &(i, d) in dy {
            yp[i] += d;
        }
        f.eval_f64(&xp, &yp)
    };

    let mut fd_dy = Vector::zeros(n);
    let mut fd_dx = Vector::zeros(n);
    for i in 0..n {
        fd_dy[i] = (at(&[], &[(i, h)])? - at(&[], &[(i, -h)])?) / (2.0 * h);
        fd_dx[i] = (at(&[(i, h)], &[])? - at(&[(i, -h)], &[])?) / (2.0 * h);
    }

    let mut fd_dy2 = Matrix::zeros(n, n);
    let mut fd_dx_dy = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            fd_dy2[(i, j)] = if i == j {
                (at(&[], &[(i, h)])? - 2.0 * jet.value + at(&[], &[(i, -h)])?) / (h * h)
            } else {
                (at(&[], &[(i, h), (j, h)])? - at(&[], &[(i, h), (j, -h)])?
                    - at(&[], &[(i, -h), (j, h)])?
                    + at(&[], &[(i, -h), (j, -h)])?)
                    / (4.0 * h * h)
            };
            fd_dx_dy[(i, j)] = (at(&[(i, h)], &[(j, h)])? - at(&[(i, h)], &[(j, -h)])?
                - at(&[(i, -h)], &[(j, h)])?
                + at(&[(i, -h)], &[(j, -h)])?)
                / (4.0 * h * h);
        }
    }

    let first_order = relative(jet.dy().as_slice(), fd_dy.as_slice())
        .max(relative(jet.dx().as_slice(), fd_dx.as_slice()));
    let second_order = relative(jet.dy2().as_slice(), fd_dy2.as_slice())
        .max(relative(jet.dx_dy().as_slice(), fd_dx_dy.as_slice()));

    let noise = f64::EPSILON * jet.value.abs().max(1.0) / (h * h);
    Ok(FdReport {
        step,
        first_order,
        second_order,
        step_underflow: noise > 1e-6,
    })
}
