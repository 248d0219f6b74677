//! Fundamental tensors, spray, nonlinear connection, Cartan horizontal
//! coefficients, Berwald coefficients and covariant derivatives of an
//! arbitrary metric function, all read off exact jets of `L` and `½L²`.

use crate::diffkit::{jet_eval, Jet};
use crate::error::{GeometryError, Result};
use crate::metrics::{CovectorJet, Energy, HVectorField, MetricFunction};
use crate::tensor::{max_abs_matrix, max_abs_vector, Matrix, Rank3, Vector};

/// Below this `|det g|` the metric is treated as degenerate.
pub const DEGENERACY_FLOOR: f64 = 1e-12;

/// Relative y-step for the finite-difference Berwald coefficients.
pub const BERWALD_STEP: f64 = 1e-5;

/// Fundamental tensors at one point `(x, y)`.
#[derive(Clone, Debug)]
pub struct BaseTensors {
    pub x: Vector,
    pub y: Vector,
    /// `L`
    pub l: f64,
    /// `l_i = ∂̇_i L`
    pub li: Vector,
    pub lij: Matrix,
    pub lijk: Rank3,
    pub g: Matrix,
    pub g_inv: Matrix,
    /// `h_ij = g_ij − l_i l_j`
    pub h: Matrix,
    /// `C_ijk = ½ ∂̇_k g_ij`
    pub c: Rank3,
    /// `C^i_jk = g^ir C_rjk`
    pub c_mixed: Rank3,
    pub det_g: f64,
    /// Jet of `L` to third order in y with mixed x-derivatives.
    pub l_jet: Jet,
    /// Jet of `½L²` to third order in y with mixed x-derivatives.
    pub e_jet: Jet,
}

impl BaseTensors {
    /// `y_i = g_ij y^j`
    pub fn y_lower(&self) -> Vector {
        &self.g * &self.y
    }

    /// `l^i = g^ij l_j`
    pub fn l_upper(&self) -> Vector {
        &self.g_inv * &self.li
    }

    /// `X^i = g^ij X_j`
    pub fn raise(&self, v: &Vector) -> Vector {
        &self.g_inv * v
    }
}

pub fn base_tensors(metric: &MetricFunction, x: &[f64], y: &[f64]) -> Result<BaseTensors> {
    let l_jet = jet_eval(metric, x, y, 3, true)?;
    let e_jet = jet_eval(&Energy(metric), x, y, 3, true)?;
    let g = e_jet.dy2().clone();
    let det_g = g.determinant();
    if !(det_g.abs() >= DEGENERACY_FLOOR) {
        return Err(GeometryError::DegenerateMetric {
            det: det_g,
            x: x.to_vec(),
            y: y.to_vec(),
        });
    }
    let g_inv = g.clone().try_inverse().ok_or_else(|| GeometryError::DegenerateMetric {
        det: det_g,
        x: x.to_vec(),
        y: y.to_vec(),
    })?;
    let li = l_jet.dy().clone();
    let h = &g - &li * li.transpose();
    let c = e_jet.dy3().scale(0.5);
    let c_mixed = c.raise_first(&g_inv);
    Ok(BaseTensors {
        x: Vector::from_column_slice(x),
        y: Vector::from_column_slice(y),
        l: l_jet.value,
        li,
        lij: l_jet.dy2().clone(),
        lijk: l_jet.dy3().clone(),
        g,
        g_inv,
        h,
        c,
        c_mixed,
        det_g,
        l_jet,
        e_jet,
    })
}

/// Spray, nonlinear connection and Cartan horizontal coefficients.
#[derive(Clone, Debug)]
pub struct ConnectionBundle {
    /// `G^i`
    pub spray: Vector,
    /// `[(i, j)] = N^i_j = ∂̇_j G^i`
    pub n: Matrix,
    /// `[(i, j, k)] = F^i_jk`
    pub f: Rank3,
}

/// Connection quantities from the jets already held in `t`.
pub fn connections(t: &BaseTensors) -> ConnectionBundle {
    let n = t.y.len();
    let ex = t.e_jet.dx();
    let exy = t.e_jet.dx_dy();
    let exyy = t.e_jet.dx_dy2();
    let y = &t.y;

    // G^i = ½ g^il (y^k ∂_k ∂̇_l E − ∂_l E)
    let rhs = Vector::from_fn(n, |l, _| (0..n).map(|k| y[k] * exy[(k, l)]).sum::<f64>() - ex[l]);
    let spray = &t.g_inv * rhs * 0.5;

    // N^i_j = −2 g^ia C_abj G^b + ½ g^il (∂_j ∂̇_l E + y^k ∂_k ∂̇_j ∂̇_l E − ∂_l ∂̇_j E)
    let cg = t.c.contract_first(&spray); // [(a, j)] = G^b C_baj
    let mut inner = Matrix::zeros(n, n); // [(l, j)]
    for l in 0..n {
        for j in 0..n {
            let trans: f64 = (0..n).map(|k| y[k] * exyy[(k, j, l)]).sum();
            inner[(l, j)] = exy[(j, l)] + trans - exy[(l, j)];
        }
    }
    let nl = &t.g_inv * (cg * -2.0 + inner * 0.5);

    // δ_j g_rk = ∂_j g_rk − 2 N^s_j C_rks
    let dg = Rank3::from_fn(n, |j, r, k| {
        exyy[(j, r, k)] - 2.0 * (0..n).map(|s| nl[(s, j)] * t.c[(r, k, s)]).sum::<f64>()
    });
    let lowered = Rank3::from_fn(n, |r, j, k| 0.5 * (dg[(j, r, k)] + dg[(k, j, r)] - dg[(r, j, k)]));
    let f = lowered.raise_first(&t.g_inv);

    ConnectionBundle { spray, n: nl, f }
}

/// Spray coefficients `G^i` alone, from a second-order jet of `½L²`.
pub fn spray(metric: &MetricFunction, x: &[f64], y: &[f64]) -> Result<Vector> {
    let jet = jet_eval(&Energy(metric), x, y, 2, true)?;
    let g = jet.dy2();
    let det = g.determinant();
    let g_inv = g.clone().try_inverse().filter(|_| det.abs() >= DEGENERACY_FLOOR).ok_or_else(|| {
        GeometryError::DegenerateMetric {
            det,
            x: x.to_vec(),
            y: y.to_vec(),
        }
    })?;
    let (ex, exy) = (jet.dx(), jet.dx_dy());
    let n = y.len();
    let rhs = Vector::from_fn(n, |l, _| (0..n).map(|k| y[k] * exy[(k, l)]).sum::<f64>() - ex[l]);
    Ok(g_inv * rhs * 0.5)
}

pub fn spray_connections(metric: &MetricFunction, x: &[f64], y: &[f64]) -> Result<ConnectionBundle> {
    Ok(connections(&base_tensors(metric, x, y)?))
}

/// Berwald coefficients `[(i, j, k)] = G^i_jk = ∂̇_k N^i_j`, by central
/// differences of the exact nonlinear connection with step
/// `BERWALD_STEP·|y|`.
pub fn berwald_coefficients(metric: &MetricFunction, x: &[f64], y: &[f64]) -> Result<Rank3> {
    let n = y.len();
    let h = BERWALD_STEP * y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut out = Rank3::zeros(n);
    for k in 0..n {
        let mut yp = y.to_vec();
        let mut ym = y.to_vec();
        yp[k] += h;
        ym[k] -= h;
        let np = spray_connections(metric, x, &yp)?.n;
        let nm = spray_connections(metric, x, &ym)?.n;
        for i in 0..n {
            for j in 0..n {
                out[(i, j, k)] = (np[(i, j)] - nm[(i, j)]) / (2.0 * h);
            }
        }
    }
    Ok(out)
}

/// `X_i|j = ∂_j X_i − N^r_j ∂̇_r X_i − X_r F^r_ij` as `[(i, j)]`.
pub fn h_cov_deriv(x: &CovectorJet, conn: &ConnectionBundle) -> Matrix {
    let n = x.value.len();
    // ∂̇_r X_i N^r_j
    let transport = &x.dy * &conn.n;
    let twist = conn.f.contract_first(&x.value);
    Matrix::from_fn(n, n, |i, j| x.dx[(i, j)] - transport[(i, j)] - twist[(i, j)])
}

/// `X_i|_j = ∂̇_j X_i − X_r C^r_ij` as `[(i, j)]`.
pub fn v_cov_deriv(x: &CovectorJet, t: &BaseTensors) -> Matrix {
    &x.dy - t.c_mixed.contract_first(&x.value)
}

/// The supporting element `l_i` as a covector jet.
pub fn supporting_element_jet(t: &BaseTensors) -> CovectorJet {
    CovectorJet {
        value: t.li.clone(),
        dy: t.lij.clone(),
        dx: t.l_jet.dx_dy().transpose(),
    }
}

/// h-covariant derivative of an h-vector and its contractions.
#[derive(Clone, Debug)]
pub struct CovariantDerivs {
    /// `b_i`
    pub b: Vector,
    /// `b^i = g^ij b_j` (base metric)
    pub b_up: Vector,
    /// `[(i, j)] = b_i|j`
    pub bij: Matrix,
    /// `E_ij = ½(b_i|j + b_j|i)`
    pub e: Matrix,
    /// `F_ij = ½(b_i|j − b_j|i)`
    pub f: Matrix,
    /// `β_|j`
    pub beta_j: Vector,
    pub beta_0: f64,
    pub e_i0: Vector,
    pub f_i0: Vector,
    /// `b^i F_ij y^j`
    pub f_beta0: f64,
    pub e_00: f64,
    /// `ρ_k = ∂_k ρ`
    pub rho_k: Vector,
}

pub fn h_cov_deriv_b(t: &BaseTensors, b: &HVectorField, conn: &ConnectionBundle) -> CovariantDerivs {
    let n = t.y.len();
    let jet = b.covector_jet(t.x.as_slice(), &t.l_jet);
    let bij = h_cov_deriv(&jet, conn);
    let e = (&bij + bij.transpose()) * 0.5;
    let f = (&bij - bij.transpose()) * 0.5;

    // β = b_i y^i as a scalar: β_|j = ∂_j β − N^r_j ∂̇_r β
    let y = &t.y;
    let dx_beta = jet.dx.transpose() * y;
    let dy_beta = &jet.value + jet.dy.transpose() * y;
    let beta_j = dx_beta - conn.n.transpose() * dy_beta;

    let b_up = t.raise(&jet.value);
    let e_i0 = &e * y;
    let f_i0 = &f * y;
    CovariantDerivs {
        beta_0: beta_j.dot(y),
        f_beta0: b_up.dot(&f_i0),
        e_00: y.dot(&e_i0),
        b: jet.value,
        b_up,
        bij,
        e,
        f,
        beta_j,
        e_i0,
        f_i0,
        rho_k: Vector::zeros(n),
    }
}

/// Worst residuals of the structural identities of the Cartan connection.
///
/// Each residual is divided by `max(1, m)` where `m` bounds the size of the
/// terms that cancel, so values near the edge of a metric's cone stay
/// comparable with a fixed tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityResiduals {
    /// `max |g_ij|k|`
    pub metricity: f64,
    /// `max |F^i_jk y^j − N^i_k|`
    pub deflection: f64,
    /// `max |N^i_k y^k − 2G^i|`
    pub spray_euler: f64,
    /// `max |l_i|j|`
    pub supporting_element: f64,
    /// `max |C_ijk y^k|`
    pub cartan_transverse: f64,
    /// `max |F^i_jk − F^i_kj|`
    pub torsion: f64,
}

pub fn identity_residuals(t: &BaseTensors, conn: &ConnectionBundle) -> IdentityResiduals {
    let n = t.y.len();
    let y = &t.y;
    let y_size = max_abs_vector(y) * n as f64;
    let exyy = t.e_jet.dx_dy2();
    let (n_size, f_size, c_size) = (max_abs_matrix(&conn.n), conn.f.max_abs(), t.c.max_abs());
    let mut metricity = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut v = exyy[(k, i, j)];
                for r in 0..n {
                    v -= 2.0 * conn.n[(r, k)] * t.c[(r, i, j)];
                    v -= t.g[(r, j)] * conn.f[(r, i, k)];
                    v -= t.g[(i, r)] * conn.f[(r, j, k)];
                }
                metricity = metricity.max(v.abs());
            }
        }
    }
    let metricity_size = exyy.max_abs().max(n as f64 * (n_size * c_size + max_abs_matrix(&t.g) * f_size));
    let mut deflection = 0.0f64;
    for i in 0..n {
        for k in 0..n {
            let v: f64 = (0..n).map(|j| conn.f[(i, j, k)] * y[j]).sum();
            deflection = deflection.max((v - conn.n[(i, k)]).abs());
        }
    }
    let spray_euler = max_abs_vector(&(&conn.n * y - &conn.spray * 2.0));
    let jet = supporting_element_jet(t);
    let supporting_element = max_abs_matrix(&h_cov_deriv(&jet, conn));
    let l_size = max_abs_matrix(&jet.dx)
        .max(n as f64 * (max_abs_matrix(&jet.dy) * n_size + max_abs_vector(&jet.value) * f_size));
    let rel = |r: f64, size: f64| r / size.max(1.0);
    IdentityResiduals {
        metricity: rel(metricity, metricity_size),
        deflection: rel(deflection, f_size * y_size),
        spray_euler: rel(spray_euler, n_size * y_size),
        supporting_element: rel(supporting_element, l_size),
        cartan_transverse: rel(max_abs_matrix(&t.c.contract_last(y)), c_size * y_size),
        torsion: rel(conn.f.asymmetry_last_two(), f_size),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{hexp_apply, CovectorField, MatrixField};
    use crate::tensor::max_abs_diff;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    fn conformal(s: &[f64]) -> MetricFunction {
        MetricFunction::riemannian(MatrixField::conformal_euclidean(v(s)))
    }

    /// Levi-Civita symbols of `exp(2 s·x) δ_ij`.
    fn conformal_christoffel(s: &[f64]) -> Rank3 {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        Rank3::from_fn(s.len(), |i, j, k| d(i, j) * s[k] + d(i, k) * s[j] - d(j, k) * s[i])
    }

    #[test]
    fn euclidean_is_flat() {
        let e = MetricFunction::euclidean(2);
        let t = base_tensors(&e, &[0.3, 0.1], &[0.0, 1.0]).unwrap();
        assert!(max_abs_diff(t.g.as_slice(), Matrix::identity(2, 2).as_slice()) < 1e-15);
        assert_eq!(t.li.as_slice(), &[0.0, 1.0]);
        assert!(max_abs_diff(t.h.as_slice(), &[1.0, 0.0, 0.0, 0.0]) < 1e-15);
        assert!(t.c.max_abs() < 1e-15);
        let conn = connections(&t);
        assert!(max_abs_vector(&conn.spray) < 1e-15);
        assert!(max_abs_matrix(&conn.n) < 1e-15);
        assert!(conn.f.max_abs() < 1e-15);
    }

    #[test]
    fn randers_supporting_element() {
        let r = MetricFunction::randers(MatrixField::identity(2), CovectorField::constant(v(&[0.3, 0.0])))
            .unwrap();
        let t = base_tensors(&r, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((t.l - 1.3).abs() < 1e-15);
        assert!((t.li[0] - 1.3).abs() < 1e-15);
        assert!(max_abs_vector(&t.c.contract_last(&t.y).column(0).into_owned()) < 1e-12);
    }

    #[test]
    fn conformal_matches_levi_civita() {
        let s = [1.0, 0.0];
        let m = conformal(&s);
        let expected = conformal_christoffel(&s);
        for (x, y) in [([0.0, 0.0], [1.0, 0.0]), ([0.2, -0.3], [0.4, 0.9]), ([-0.1, 0.5], [-1.0, 0.2])] {
            let conn = spray_connections(&m, &x, &y).unwrap();
            assert!(max_abs_diff(conn.f.as_slice(), expected.as_slice()) < 1e-12);
            // G^i = ½ Γ^i_jk y^j y^k
            let g: Vec<f64> = (0..2)
                .map(|i| 0.5 * (0..2).map(|j| (0..2).map(|k| expected[(i, j, k)] * y[j] * y[k]).sum::<f64>()).sum::<f64>())
                .collect();
            assert!(max_abs_diff(conn.spray.as_slice(), &g) < 1e-12);
        }
    }

    #[test]
    fn homothety_preserves_connection() {
        let base = MetricFunction::randers(
            MatrixField::conformal_euclidean(v(&[0.4, -0.2])),
            CovectorField::affine(v(&[0.1, 0.2]), Matrix::from_row_slice(2, 2, &[0.1, 0.05, 0.0, -0.1])).unwrap(),
        )
        .unwrap();
        let star = hexp_apply(&base, &HVectorField::homothety(2, 0.2)).unwrap();
        let (x, y) = ([0.1, 0.2], [0.7, -0.3]);
        let a = spray_connections(&base, &x, &y).unwrap();
        let b = spray_connections(&star, &x, &y).unwrap();
        assert!(max_abs_diff(a.spray.as_slice(), b.spray.as_slice()) < 1e-12);
        assert!(max_abs_diff(a.n.as_slice(), b.n.as_slice()) < 1e-12);
        assert!(max_abs_diff(a.f.as_slice(), b.f.as_slice()) < 1e-11);
    }

    #[test]
    fn identities_hold_on_the_zoo() {
        let alpha = MatrixField::new_conformal(Matrix::from_row_slice(2, 2, &[1.2, 0.1, 0.1, 0.8]), v(&[0.3, -0.2]))
            .unwrap();
        let beta = CovectorField::affine(v(&[0.2, 0.1]), Matrix::from_row_slice(2, 2, &[0.1, 0.0, 0.05, 0.1])).unwrap();
        let zoo = [
            MetricFunction::euclidean(2),
            MetricFunction::riemannian(alpha.clone()),
            MetricFunction::randers(alpha.clone(), beta.clone()).unwrap(),
            MetricFunction::kropina(alpha.clone(), beta.clone()).unwrap(),
            MetricFunction::matsumoto(alpha.clone(), beta.clone()).unwrap(),
        ];
        let (x, y) = ([0.2, -0.1], [0.8, 0.6]);
        for m in &zoo {
            let t = base_tensors(m, &x, &y).unwrap();
            let r = identity_residuals(&t, &connections(&t));
            assert!(r.metricity < 1e-8, "{} {r:?}", m.name());
            assert!(r.deflection < 1e-9 && r.spray_euler < 1e-9, "{} {r:?}", m.name());
            assert!(r.supporting_element < 1e-9, "{} {r:?}", m.name());
            assert!(r.cartan_transverse < 1e-12 && r.torsion < 1e-12, "{} {r:?}", m.name());
            let gg = &t.g_inv * &t.g - Matrix::identity(2, 2);
            assert!(max_abs_matrix(&gg) < 1e-12);
        }
    }

    #[test]
    fn berwald_contracts_to_nonlinear_connection() {
        let m = MetricFunction::randers(
            MatrixField::conformal_euclidean(v(&[0.5, 0.1])),
            CovectorField::affine(v(&[0.1, -0.2]), Matrix::from_row_slice(2, 2, &[0.0, 0.3, -0.1, 0.0])).unwrap(),
        )
        .unwrap();
        let (x, y) = ([0.1, 0.3], [0.6, 0.5]);
        let gb = berwald_coefficients(&m, &x, &y).unwrap();
        let nl = spray_connections(&m, &x, &y).unwrap().n;
        assert!(gb.asymmetry_last_two() < 1e-7);
        let contracted = gb.contract_last(&v(&y));
        assert!(max_abs_diff(contracted.as_slice(), nl.as_slice()) < 1e-8);
    }

    #[test]
    fn covariant_derivatives_of_h_vectors() {
        let e = MetricFunction::euclidean(2);
        let t = base_tensors(&e, &[0.3, 0.1], &[0.6, 0.8]).unwrap();
        let conn = connections(&t);
        let d = h_cov_deriv_b(&t, &HVectorField::constant(v(&[0.1, 0.0])), &conn);
        assert!(max_abs_matrix(&d.bij) < 1e-15);

        // homothety: b_i|j = c·l_i|j = 0 by metricity
        let r = MetricFunction::randers(MatrixField::conformal_euclidean(v(&[0.2, 0.1])), CovectorField::constant(v(&[0.3, 0.0])))
            .unwrap();
        let t = base_tensors(&r, &[0.1, 0.1], &[0.3, 0.9]).unwrap();
        let conn = connections(&t);
        let d = h_cov_deriv_b(&t, &HVectorField::homothety(2, 0.2), &conn);
        assert!(max_abs_matrix(&d.bij) < 1e-9);

        // constant b on a conformal base: b_i|j = −b_r Γ^r_ij
        let s = [1.0, 0.0];
        let m = conformal(&s);
        let t = base_tensors(&m, &[0.0, 0.0], &[0.6, -0.8]).unwrap();
        let conn = connections(&t);
        let b = v(&[0.1, 0.0]);
        let d = h_cov_deriv_b(&t, &HVectorField::constant(b.clone()), &conn);
        let expected = conformal_christoffel(&s).contract_first(&b) * -1.0;
        assert!(max_abs_diff(d.bij.as_slice(), expected.as_slice()) < 1e-12);
        assert!(max_abs_matrix(&d.bij) > 1e-2);
        // scalar route for β_|j agrees with y^i b_i|j
        let yb = d.bij.transpose() * &t.y;
        assert!(max_abs_diff(yb.as_slice(), d.beta_j.as_slice()) < 1e-12);
        assert!((d.e_00 - d.beta_0).abs() < 1e-12);
        assert!(max_abs_diff((&d.e + &d.f).as_slice(), d.bij.as_slice()) == 0.0);
    }

    #[test]
    fn vertical_derivative_of_supporting_element() {
        let r = MetricFunction::matsumoto(MatrixField::identity(2), CovectorField::constant(v(&[0.2, 0.1]))).unwrap();
        let t = base_tensors(&r, &[0.0, 0.0], &[0.8, 0.3]).unwrap();
        let lv = v_cov_deriv(&supporting_element_jet(&t), &t);
        assert!(max_abs_diff(lv.as_slice(), (&t.h / t.l).as_slice()) < 1e-12);
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let k = MetricFunction::kropina(MatrixField::identity(2), CovectorField::constant(v(&[1.0, 0.0]))).unwrap();
        // on the boundary of the Kropina cone β = 0 the value blows up
        assert!(base_tensors(&k, &[0.0, 0.0], &[0.0, 1.0]).is_err());
    }
}
