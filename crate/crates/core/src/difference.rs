//! The difference tensor `D^i_jk = *F^i_jk − F^i_jk` between the Cartan
//! connections of the changed and the base metric.
//!
//! `D` is built in three steps (`D^i_00`, then `D^i_0j`, then `D^i_jk`), each
//! one solving a system `*L_ir A^r = B_i`, `*L_r A^r = B` in closed form. The
//! result is compared against the connection of `*L` computed directly.

use serde::{Deserialize, Serialize};

use crate::closed_forms::{change_scalars, star_l_derivs, ChangeScalars};
use crate::error::Result;
use crate::fundamentals::{
    base_tensors, berwald_coefficients, connections, h_cov_deriv_b, BaseTensors, ConnectionBundle,
    CovariantDerivs,
};
use crate::metrics::{hexp_apply, ChartSpec, HVectorField, MetricFunction};
use crate::tensor::{max_abs_matrix, max_abs_vector, outer, Matrix, Rank3, Vector};

/// Which version of the intermediate tensors to evaluate.
///
/// `Printed` evaluates the intermediate formulas without corrections (reading the
/// undefined `B_0` as `β_|0`). `Corrected` restores the terms coming from the
/// h-derivative of `m_i`, the cyclic bracket `m_i m_j l_r` and the factor 2
/// on `E_ik`; only this version reproduces the directly computed connection
/// when `m_i|k ≠ 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transcription {
    Printed,
    #[default]
    Corrected,
}

/// Everything the pipeline needs at one point `(x, y)`.
#[derive(Clone, Debug)]
pub struct ChangePoint {
    pub base: BaseTensors,
    pub conn: ConnectionBundle,
    pub covd: CovariantDerivs,
    pub cs: ChangeScalars,
    /// `*L_i`, `*L_ij`, `*L_ijk` from the closed forms.
    pub star_li: Vector,
    pub star_lij: Matrix,
    pub star_lijk: Rank3,
}

impl ChangePoint {
    pub fn new(metric: &MetricFunction, b: &HVectorField, x: &[f64], y: &[f64]) -> Result<Self> {
        let base = base_tensors(metric, x, y)?;
        let conn = connections(&base);
        let covd = h_cov_deriv_b(&base, b, &conn);
        let cs = change_scalars(&base, &covd.b, b.rho())?;
        let (star_li, star_lij, star_lijk, _) = star_l_derivs(&base, &cs);
        Ok(ChangePoint {
            base,
            conn,
            covd,
            cs,
            star_li,
            star_lij,
            star_lijk,
        })
    }

    /// `ρ_0 = ρ_k y^k`
    fn rho_0(&self) -> f64 {
        self.covd.rho_k.dot(&self.base.y)
    }
}

/// Closed-form solution `A^j` of `*L_ir A^r = B_i`, `*L_r A^r = B`.
///
/// The system is consistent only when `B_i y^i = 0`, since `*L_ir y^r = 0`.
pub fn solve_special(bi: &Vector, b: f64, cs: &ChangeScalars, t: &BaseTensors) -> Vector {
    let (l, e, nu) = (t.l, cs.e_tau, cs.nu);
    let kd = cs.divisor();
    let b_beta = bi.dot(&cs.b_up);
    let b_up = t.raise(bi);
    &b_up * (l / (nu * e)) + t.l_upper() * ((b - l * b_beta / kd) / e)
        - &cs.m_up * (l * b_beta / (nu * e * kd))
}

/// Residuals `(max |*L_ir A^r − B_i|, |*L_r A^r − B|)`.
pub fn special_residual(a: &Vector, bi: &Vector, b: f64, p: &ChangePoint) -> (f64, f64) {
    (
        max_abs_vector(&(&p.star_lij * a - bi)),
        (p.star_li.dot(a) - b).abs(),
    )
}

/// `m_i|k = b_i|k − (β_|k / L) l_i`
pub fn m_cov_deriv(p: &ChangePoint) -> Matrix {
    &p.covd.bij - outer(&p.base.li, &p.covd.beta_j) / p.base.l
}

/// `K_ijk = (e^τ/L)(m_i|k m_j + m_i m_j|k)`, the part of `(*L_ij)_|k` that
/// comes from differentiating `m_i m_j`.
pub fn k_tensor(p: &ChangePoint) -> Rank3 {
    let mk = m_cov_deriv(p);
    let m = &p.cs.m;
    let s = p.cs.e_tau / p.base.l;
    Rank3::from_fn(m.len(), |i, j, k| s * (mk[(i, k)] * m[j] + m[i] * mk[(j, k)]))
}

/// `V_ijk = e^τ[(ν−1)β_|k/L + ρ_k] L_ij + (e^τ/L²) β_|k m_i m_j`, plus
/// `K_ijk` for the corrected transcription.
fn v_tensor(p: &ChangePoint, mode: Transcription) -> Rank3 {
    let (t, cs, covd) = (&p.base, &p.cs, &p.covd);
    let (e, l, nu) = (cs.e_tau, t.l, cs.nu);
    let m = &cs.m;
    let v = Rank3::from_fn(m.len(), |i, j, k| {
        e * ((nu - 1.0) * covd.beta_j[k] / l + covd.rho_k[k]) * t.lij[(i, j)]
            + e / (l * l) * covd.beta_j[k] * m[i] * m[j]
    });
    match mode {
        Transcription::Printed => v,
        Transcription::Corrected => &v + &k_tensor(p),
    }
}

/// The difference tensor and its intermediates.
#[derive(Clone, Debug)]
pub struct DifferenceTensor {
    /// `D^i_00`
    pub d00: Vector,
    /// `[(i, j)] = D^i_0j`
    pub d0j: Matrix,
    /// `[(i, j, k)] = D^i_jk`
    pub djk: Rank3,
    /// `[(i, j)] = G_ij`, right-hand side of `*L_ir D^r_0j = G_ij`
    pub g_ij: Matrix,
    /// `G_j`, right-hand side of `*L_r D^r_0j = G_j`
    pub g_j: Vector,
    /// `[(i, k)] = H_ik`, right-hand side of `*L_r D^r_ik = H_ik`
    pub h_ik: Matrix,
    /// `[(j, i, k)] = H_jik`, right-hand side of `*L_rj D^r_ik = H_jik`
    pub h_jik: Rank3,
    /// `m_r D^r_00`
    pub m_d00: f64,
}

/// `D^i_00`
pub fn d00(p: &ChangePoint) -> Vector {
    let (t, cs, covd) = (&p.base, &p.cs, &p.covd);
    let (l, e, nu) = (t.l, cs.e_tau, cs.nu);
    let kd = cs.divisor();
    let f_up = t.raise(&covd.f_i0);
    let bracket = e / l * covd.beta_0 * cs.m2 + 2.0 * e * covd.f_beta0;
    (&cs.m_up * (e / l * covd.beta_0) + f_up * (2.0 * e)) * (l / (nu * e))
        + t.l_upper() * (covd.e_00 - l / e / kd * bracket)
        - &cs.m_up * (l / (nu * e) / kd * bracket)
}

/// `G_ij`
pub fn g_ij(p: &ChangePoint, d00: &Vector, mode: Transcription) -> Matrix {
    let (t, cs, covd) = (&p.base, &p.cs, &p.covd);
    let (l, e, nu) = (t.l, cs.e_tau, cs.nu);
    let n = t.y.len();
    let m = &cs.m;
    let md = m.dot(d00);
    let ld = t.li.dot(d00);
    let lijr_d = t.lijk.contract_last(d00);
    let l_d = &t.lij * d00;
    let beta = &covd.beta_j;
    let rho_0 = p.rho_0();
    let k0 = match mode {
        Transcription::Printed => None,
        Transcription::Corrected => Some(k_tensor(p).contract_last(&t.y)),
    };
    Matrix::from_fn(n, n, |i, j| {
        let cyclic_ml = md * t.lij[(i, j)] + m[i] * l_d[j] + m[j] * l_d[i];
        let cyclic_mm = match mode {
            Transcription::Printed => 3.0 * m[i] * m[j] * md / l,
            Transcription::Corrected => (m[i] * m[j] * ld + m[j] * md * t.li[i] + md * m[i] * t.li[j]) / l,
        };
        let mut two_g = e / l * (beta[j] * m[i] - beta[i] * m[j]) - e * nu * lijr_d[(i, j)]
            - e / l * ((nu - 1.0) * cyclic_ml - cyclic_mm)
            + 2.0 * e * covd.f[(i, j)]
            - e / (l * l) * m[i] * m[j] * md
            + (nu - 1.0) / l * e * covd.beta_0 * t.lij[(i, j)]
            + e / (l * l) * covd.beta_0 * m[i] * m[j]
            + e * rho_0 * t.lij[(i, j)];
        if let Some(k0) = &k0 {
            two_g += k0[(i, j)];
        }
        0.5 * two_g
    })
}

/// `G_j = e^τ (E_j0 − F_j0)`
pub fn g_j(p: &ChangePoint) -> Vector {
    (&p.covd.e_i0 - &p.covd.f_i0) * p.cs.e_tau
}

/// Apply the closed-form solver column by column.
fn solve_columns(rhs: &Matrix, scalar: &Vector, p: &ChangePoint) -> Matrix {
    let n = rhs.nrows();
    let mut out = Matrix::zeros(n, n);
    for j in 0..n {
        let col = solve_special(&rhs.column(j).into_owned(), scalar[j], &p.cs, &p.base);
        out.set_column(j, &col);
    }
    out
}

/// `D^i_0j`, with `G_ij` and `G_j`.
pub fn d0j(p: &ChangePoint, d00: &Vector, mode: Transcription) -> (Matrix, Matrix, Vector) {
    let g = g_ij(p, d00, mode);
    let gj = g_j(p);
    (solve_columns(&g, &gj, p), g, gj)
}

/// `H_ik`
pub fn h_ik(p: &ChangePoint, d0j: &Matrix, mode: Transcription) -> Matrix {
    let (t, cs, covd) = (&p.base, &p.cs, &p.covd);
    let (l, e) = (t.l, cs.e_tau);
    let m = &cs.m;
    let a_d = &p.star_lij * d0j;
    let e_factor = match mode {
        Transcription::Printed => e,
        Transcription::Corrected => 2.0 * e,
    };
    let n = m.len();
    Matrix::from_fn(n, n, |i, k| {
        0.5 * (e / l * (covd.beta_j[k] * m[i] + covd.beta_j[i] * m[k]) + e_factor * covd.e[(i, k)]
            - a_d[(i, k)]
            - a_d[(k, i)])
    })
}

/// `H_jik` stored as `[(j, i, k)]`.
pub fn h_jik(p: &ChangePoint, d0j: &Matrix, mode: Transcription) -> Rank3 {
    let v = v_tensor(p, mode);
    let q = star_lijr_d0k(p, d0j);
    Rank3::from_fn(v.dim(), |j, i, k| {
        0.5 * (v[(i, j, k)] + v[(j, k, i)] - v[(k, i, j)] - q[(i, j, k)] - q[(j, k, i)] + q[(k, i, j)])
    })
}

/// `[(i, j, k)] = *L_ijr D^r_0k`
fn star_lijr_d0k(p: &ChangePoint, d0j: &Matrix) -> Rank3 {
    let s = &p.star_lijk;
    let n = s.dim();
    Rank3::from_fn(n, |i, j, k| (0..n).map(|r| s[(i, j, r)] * d0j[(r, k)]).sum())
}

/// `D^i_jk`
pub fn djk(p: &ChangePoint, h_ik: &Matrix, h_jik: &Rank3) -> Rank3 {
    let n = h_ik.nrows();
    let mut out = Rank3::zeros(n);
    for i in 0..n {
        for k in 0..n {
            let rhs = Vector::from_fn(n, |mi, _| h_jik[(mi, i, k)]);
            let col = solve_special(&rhs, h_ik[(i, k)], &p.cs, &p.base);
            for j in 0..n {
                out[(j, i, k)] = col[j];
            }
        }
    }
    out
}

/// The full three-step construction at one point.
pub fn difference_tensor(p: &ChangePoint, mode: Transcription) -> DifferenceTensor {
    let d00 = d00(p);
    let (d0j, g_ij, g_j) = d0j(p, &d00, mode);
    let h_ik = h_ik(p, &d0j, mode);
    let h_jik = h_jik(p, &d0j, mode);
    let djk = djk(p, &h_ik, &h_jik);
    DifferenceTensor {
        m_d00: p.cs.m.dot(&d00),
        d00,
        d0j,
        djk,
        g_ij,
        g_j,
        h_ik,
        h_jik,
    }
}

/// `D` read off the connections of `L` and `*L` computed directly.
#[derive(Clone, Debug)]
pub struct OracleDifference {
    /// `2(*G^i − G^i)`
    pub d00: Vector,
    /// `*N^i_j − N^i_j`
    pub d0j: Matrix,
    /// `*F^i_jk − F^i_jk`
    pub djk: Rank3,
}

impl OracleDifference {
    pub fn from_connections(base: &ConnectionBundle, star: &ConnectionBundle) -> Self {
        OracleDifference {
            d00: (&star.spray - &base.spray) * 2.0,
            d0j: &star.n - &base.n,
            djk: &star.f - &base.f,
        }
    }
}

pub fn oracle_difference(
    metric: &MetricFunction,
    b: &HVectorField,
    x: &[f64],
    y: &[f64],
) -> Result<OracleDifference> {
    let base = connections(&base_tensors(metric, x, y)?);
    let star = connections(&base_tensors(&hexp_apply(metric, b)?, x, y)?);
    Ok(OracleDifference::from_connections(&base, &star))
}

/// Residuals of the defining equations for a candidate `D`.
#[derive(Clone, Debug, PartialEq)]
pub struct DefiningResiduals {
    /// Equation relating `*L_i|j` to `b_i|j`, as `[(i, j)]`.
    pub first: f64,
    /// Equation relating `(*L_ij)_|k` to `b_i|j`, as `[(i, j, k)]`.
    pub second: f64,
    /// Symmetric part of the first equation.
    pub symmetric: f64,
    /// Skew part of the first equation.
    pub skew: f64,
    /// `max |sym + skew − 2·first|`, zero up to rounding.
    pub split: f64,
}

/// Plug `(D^i_0j, D^i_jk)` into the defining equations.
pub fn defining_residuals(p: &ChangePoint, d0j: &Matrix, djk: &Rank3, mode: Transcription) -> DefiningResiduals {
    let (t, cs, covd) = (&p.base, &p.cs, &p.covd);
    let (l, e) = (t.l, cs.e_tau);
    let n = t.y.len();
    let m = &cs.m;
    let a_d = &p.star_lij * d0j;
    let ld = djk.contract_first(&p.star_li);
    let first = Matrix::from_fn(n, n, |i, j| {
        a_d[(i, j)] + ld[(i, j)] - e / l * covd.beta_j[j] * m[i] - e * covd.bij[(i, j)]
    });
    let symmetric = Matrix::from_fn(n, n, |i, j| {
        2.0 * ld[(i, j)] + a_d[(i, j)] + a_d[(j, i)]
            - e / l * (covd.beta_j[j] * m[i] + covd.beta_j[i] * m[j])
            - 2.0 * e * covd.e[(i, j)]
    });
    let skew = Matrix::from_fn(n, n, |i, j| {
        a_d[(i, j)] - a_d[(j, i)] - e / l * (covd.beta_j[j] * m[i] - covd.beta_j[i] * m[j])
            - 2.0 * e * covd.f[(i, j)]
    });
    let split = max_abs_matrix(&(&symmetric + &skew - &first * 2.0));

    let q = star_lijr_d0k(p, d0j);
    let v = v_tensor(p, mode);
    let a = &p.star_lij;
    let mut second = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut r = q[(i, j, k)] - v[(i, j, k)];
                for s in 0..n {
                    r += a[(s, j)] * djk[(s, i, k)] + a[(i, s)] * djk[(s, j, k)];
                }
                second = second.max(r.abs());
            }
        }
    }
    DefiningResiduals {
        first: max_abs_matrix(&first),
        second,
        symmetric: max_abs_matrix(&symmetric),
        skew: max_abs_matrix(&skew),
        split,
    }
}

/// Sampled evidence for "connections coincide iff `b` is parallel".
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParallelVerdict {
    pub samples: usize,
    pub tol: f64,
    /// `max |b_i|j|`
    pub max_bij: f64,
    /// `max |D|` from the pipeline
    pub max_d_pipeline: f64,
    /// `max |*F − F|` computed directly
    pub max_d_oracle: f64,
    pub parallel: bool,
    pub connection_preserved: bool,
    /// Both implications hold on the sample.
    pub consistent: bool,
}

pub fn parallel_criterion(
    metric: &MetricFunction,
    b: &HVectorField,
    chart: &ChartSpec,
    tol: f64,
    mode: Transcription,
) -> Result<ParallelVerdict> {
    let star = hexp_apply(metric, b)?;
    let points = chart.sample(|x, y| metric.is_admissible(x, y) && star.is_admissible(x, y))?;
    let mut v = ParallelVerdict {
        samples: points.len(),
        tol,
        max_bij: 0.0,
        max_d_pipeline: 0.0,
        max_d_oracle: 0.0,
        parallel: false,
        connection_preserved: false,
        consistent: false,
    };
    for s in &points {
        let p = ChangePoint::new(metric, b, &s.x, &s.y)?;
        let d = difference_tensor(&p, mode);
        let star_conn = connections(&base_tensors(&star, &s.x, &s.y)?);
        let oracle = OracleDifference::from_connections(&p.conn, &star_conn);
        v.max_bij = v.max_bij.max(max_abs_matrix(&p.covd.bij));
        v.max_d_pipeline = v.max_d_pipeline.max(d.djk.max_abs());
        v.max_d_oracle = v.max_d_oracle.max(oracle.djk.max_abs());
    }
    v.parallel = v.max_bij < tol;
    v.connection_preserved = v.max_d_oracle < tol && v.max_d_pipeline < tol;
    v.consistent = v.parallel == v.connection_preserved;
    Ok(v)
}

/// `*G^i_kh − G^i_kh` and `∂̇_h D^i_0k` at one point, both as `[(i, k, h)]`.
#[derive(Clone, Debug)]
pub struct BerwaldComparison {
    pub oracle: Rank3,
    pub pipeline: Rank3,
}

impl BerwaldComparison {
    pub fn max_gap(&self) -> f64 {
        (&self.oracle - &self.pipeline).max_abs()
    }
}

pub fn berwald_diff(
    metric: &MetricFunction,
    b: &HVectorField,
    x: &[f64],
    y: &[f64],
    mode: Transcription,
) -> Result<BerwaldComparison> {
    let star = hexp_apply(metric, b)?;
    let oracle = &berwald_coefficients(&star, x, y)? - &berwald_coefficients(metric, x, y)?;
    let n = y.len();
    let step = crate::fundamentals::BERWALD_STEP * y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut pipeline = Rank3::zeros(n);
    for h in 0..n {
        let mut yp = y.to_vec();
        let mut ym = y.to_vec();
        yp[h] += step;
        ym[h] -= step;
        let dp = difference_tensor(&ChangePoint::new(metric, b, x, &yp)?, mode).d0j;
        let dm = difference_tensor(&ChangePoint::new(metric, b, x, &ym)?, mode).d0j;
        for i in 0..n {
            for k in 0..n {
                pipeline[(i, k, h)] = (dp[(i, k)] - dm[(i, k)]) / (2.0 * step);
            }
        }
    }
    Ok(BerwaldComparison { oracle, pipeline })
}
