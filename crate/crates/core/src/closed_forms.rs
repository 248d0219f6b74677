//! Closed forms for the changed metric `*L = L·exp(β/L)`: its derivatives,
//! metric and Cartan tensors, the rank-one inversion lemma and the inverse
//! metric, all expressed through base quantities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{GeometryError, Result};
use crate::fundamentals::BaseTensors;
use crate::tensor::{cyclic_sum, outer, outer3, scaled_diff, max_abs_diff, Matrix, Rank3, Vector};

/// `|ν|` and `|m² + ν|` must exceed this; both appear as divisors.
pub const REGULARITY_FLOOR: f64 = 1e-10;

/// `|1 + σ n·n|` below this makes the rank-one update singular.
pub const RANK_ONE_FLOOR: f64 = 1e-14;

/// Scalars and covectors shared by every closed form of the change.
#[derive(Clone, Debug)]
pub struct ChangeScalars {
    pub beta: f64,
    /// `τ = β/L`
    pub tau: f64,
    pub rho: f64,
    /// `ν = 1 + ρ − τ`
    pub nu: f64,
    pub b: Vector,
    /// `b^i`, raised with the base metric
    pub b_up: Vector,
    pub b2: f64,
    /// `m_i = b_i − τ l_i`
    pub m: Vector,
    pub m_up: Vector,
    pub m2: f64,
    pub e_tau: f64,
    pub e_2tau: f64,
}

impl ChangeScalars {
    /// `m² + ν`
    pub fn divisor(&self) -> f64 {
        self.m2 + self.nu
    }
}

pub fn change_scalars(t: &BaseTensors, b: &Vector, rho: f64) -> Result<ChangeScalars> {
    let beta = b.dot(&t.y);
    let tau = beta / t.l;
    let nu = 1.0 + rho - tau;
    let m = b - &t.li * tau;
    let m_up = t.raise(&m);
    let b_up = t.raise(b);
    let m2 = m.dot(&m_up);
    if !(nu.abs() >= REGULARITY_FLOOR && (m2 + nu).abs() >= REGULARITY_FLOOR) {
        return Err(GeometryError::ChangeSingularity { nu, divisor: m2 + nu });
    }
    Ok(ChangeScalars {
        beta,
        tau,
        rho,
        nu,
        b2: b.dot(&b_up),
        b: b.clone(),
        b_up,
        m,
        m_up,
        m2,
        e_tau: tau.exp(),
        e_2tau: (2.0 * tau).exp(),
    })
}

/// Quantities of the changed space, from closed forms or from the oracle.
#[derive(Clone, Debug)]
pub struct StarredTensors {
    pub l: f64,
    pub li: Vector,
    pub lij: Matrix,
    pub lijk: Rank3,
    /// Normalised supporting element `*l_i`.
    pub l_norm: Vector,
    pub g: Matrix,
    pub c: Rank3,
    pub g_inv: Matrix,
    /// `[(h, i, j)] = *C^h_ij`
    pub c_mixed: Rank3,
}

/// `(*L_i, *L_ij, *L_ijk, *l_i)`
pub fn star_l_derivs(t: &BaseTensors, cs: &ChangeScalars) -> (Vector, Matrix, Rank3, Vector) {
    let (e, l, m) = (cs.e_tau, t.l, &cs.m);
    let li = (m + &t.li) * e;
    let lij = &t.lij * (e * cs.nu) + outer(m, m) * (e / l);
    let mm = outer(m, m);
    let bracket = &cyclic_sum(&t.li, &mm) - &outer3(m, m, m);
    let lijk = &(&(&t.lijk * (e * cs.nu)) + &(&cyclic_sum(m, &t.lij) * ((cs.rho - cs.tau) * e / l)))
        - &(&bracket * (e / (l * l)));
    let l_norm = li.clone();
    (li, lij, lijk, l_norm)
}

pub fn star_metric(t: &BaseTensors, cs: &ChangeScalars) -> Matrix {
    let (tau, rho) = (cs.tau, cs.rho);
    let bl = outer(&cs.b, &t.li);
    (&t.g * cs.nu
        + outer(&t.li, &t.li) * (2.0 * tau * tau - tau - rho)
        + (&bl + bl.transpose()) * (1.0 - 2.0 * tau)
        + outer(&cs.b, &cs.b) * 2.0)
        * cs.e_2tau
}

pub fn star_cartan(t: &BaseTensors, cs: &ChangeScalars) -> Rank3 {
    let (e2, l, m) = (cs.e_2tau, t.l, &cs.m);
    &(&(&t.c * (cs.nu * e2)) + &(&outer3(m, m, m) * (2.0 * e2 / l)))
        + &(&cyclic_sum(m, &t.h) * (e2 * (2.0 * cs.nu - 1.0) / (2.0 * l)))
}

/// Inverse and determinant of `m_ij + n_i n_j` from the inverse of `m_ij`.
pub fn invert_rank_one(m: &Matrix, n: &Vector) -> Result<(Matrix, f64)> {
    let m_inv = m.clone().try_inverse().ok_or_else(|| GeometryError::InvalidParameter(
        "rank-one update of a singular matrix".into(),
    ))?;
    rank_one_update(&m_inv, m.determinant(), n, 1.0)
}

/// Signed update: given `M^{-1}` and `det M`, return the inverse and
/// determinant of `M + σ n n`.
pub fn rank_one_update(m_inv: &Matrix, det: f64, n: &Vector, sigma: f64) -> Result<(Matrix, f64)> {
    let n_up = m_inv * n;
    let denominator = 1.0 + sigma * n.dot(&n_up);
    if denominator.abs() < RANK_ONE_FLOOR {
        return Err(GeometryError::ShermanMorrisonSingularity { denominator });
    }
    let inv = m_inv - outer(&n_up, &n_up) * (sigma / denominator);
    Ok((inv, denominator * det))
}

/// Worst `|(m_ij + n_i n_j) l^jk − δ_i^k|` over seeded random instances with
/// `m` symmetric positive definite (eigenvalues in `[0.5, 2]`) and standard
/// normal `n`.
pub fn rank_one_product_check(instances: usize, dim: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let raw = Matrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = raw.qr().q();
        let eig = Matrix::from_diagonal(&Vector::from_fn(dim, |_, _| rng.random_range(0.5..=2.0)));
        let m = &q * eig * q.transpose();
        let m = (&m + m.transpose()) * 0.5;
        let n = Vector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let (l, _) = invert_rank_one(&m, &n)?;
        let full = &m + outer(&n, &n);
        worst = worst.max((full * l - Matrix::identity(dim, dim)).amax());
    }
    Ok(worst)
}

pub fn star_inverse_metric(t: &BaseTensors, cs: &ChangeScalars) -> Matrix {
    let (tau, nu, rho) = (cs.tau, cs.nu, cs.rho);
    let k = cs.divisor();
    let l_up = t.l_upper();
    let bl = outer(&cs.b_up, &l_up);
    (&t.g_inv - outer(&cs.b_up, &cs.b_up) / k + (&bl + bl.transpose()) * ((tau - nu) / k)
        - outer(&l_up, &l_up) * ((tau - nu) / k * (cs.m2 + tau) - rho))
        * ((-2.0 * tau).exp() / nu)
}

/// Inverse of the changed metric through a chain of rank-one updates of
/// `ν g`, using `e^{−2τ} *g = ν g + m m + (l + m)(l + m) − ν l l`.
/// Returns the inverse and `det *g`.
pub fn star_inverse_by_rank_one(t: &BaseTensors, cs: &ChangeScalars) -> Result<(Matrix, f64)> {
    let n = t.y.len();
    let nu = cs.nu;
    let inv = &t.g_inv / nu;
    let det = t.det_g * nu.powi(n as i32);
    let (inv, det) = rank_one_update(&inv, det, &cs.m, 1.0)?;
    let (inv, det) = rank_one_update(&inv, det, &(&t.li + &cs.m), 1.0)?;
    let (inv, det) = rank_one_update(&inv, det, &(&t.li * nu.abs().sqrt()), -nu.signum())?;
    Ok((inv * (-2.0 * cs.tau).exp(), det * cs.e_2tau.powi(n as i32)))
}

pub fn star_cartan_mixed(t: &BaseTensors, cs: &ChangeScalars) -> Rank3 {
    let n = t.y.len();
    let (tau, nu, rho, l) = (cs.tau, cs.nu, cs.rho, t.l);
    let k = cs.divisor();
    let m = &cs.m;
    let m2 = cs.m2;
    let l_up = t.l_upper();
    let q = -&cs.b_up + &l_up * (2.0 * tau - rho - 1.0);
    let cb = t.c.contract_last(&cs.b_up);
    let h_mixed = &t.g_inv * &t.h;
    let a = 2.0 / (nu * l);
    let s = (2.0 * nu - 1.0) / (2.0 * nu * l);
    Rank3::from_fn(n, |h, i, j| {
        let mm = m[i] * m[j];
        t.c_mixed[(h, i, j)]
            + cb[(i, j)] * q[h] / k
            + a * (mm * cs.m_up[h] + mm * m2 * q[h] / k)
            + s * (m[i] * h_mixed[(h, j)]
                + m[j] * h_mixed[(h, i)]
                + cs.m_up[h] * t.h[(i, j)]
                + q[h] * (2.0 * mm + m2 * t.h[(i, j)]) / k)
    })
}

/// All closed forms at one point.
pub fn starred_closed_forms(t: &BaseTensors, cs: &ChangeScalars) -> StarredTensors {
    let (li, lij, lijk, l_norm) = star_l_derivs(t, cs);
    StarredTensors {
        l: t.l * cs.e_tau,
        li,
        lij,
        lijk,
        l_norm,
        g: star_metric(t, cs),
        c: star_cartan(t, cs),
        g_inv: star_inverse_metric(t, cs),
        c_mixed: star_cartan_mixed(t, cs),
    }
}

/// The same quantities read off the tensors of the changed metric itself.
pub fn starred_oracle(star: &BaseTensors) -> StarredTensors {
    StarredTensors {
        l: star.l,
        li: star.li.clone(),
        lij: star.lij.clone(),
        lijk: star.lijk.clone(),
        l_norm: star.li.clone(),
        g: star.g.clone(),
        c: star.c.clone(),
        g_inv: star.g_inv.clone(),
        c_mixed: star.c_mixed.clone(),
    }
}

/// Deviation of one closed form from its oracle value.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantityResidual {
    pub name: &'static str,
    pub abs: f64,
    /// Absolute deviation over `max(1, |oracle|_inf)`.
    pub rel: f64,
}

fn residual(name: &'static str, value: &[f64], reference: &[f64]) -> QuantityResidual {
    QuantityResidual {
        name,
        abs: max_abs_diff(value, reference),
        rel: scaled_diff(value, reference),
    }
}

/// Compare closed forms against the oracle, quantity by quantity.
pub fn compare_starred(closed: &StarredTensors, oracle: &StarredTensors) -> Vec<QuantityResidual> {
    vec![
        residual("*L", &[closed.l], &[oracle.l]),
        residual("*L_i", closed.li.as_slice(), oracle.li.as_slice()),
        residual("*L_ij", closed.lij.as_slice(), oracle.lij.as_slice()),
        residual("*L_ijk", closed.lijk.as_slice(), oracle.lijk.as_slice()),
        residual("*l_i", closed.l_norm.as_slice(), oracle.l_norm.as_slice()),
        residual("*g_ij", closed.g.as_slice(), oracle.g.as_slice()),
        residual("*C_ijk", closed.c.as_slice(), oracle.c.as_slice()),
        residual("*g^ij", closed.g_inv.as_slice(), oracle.g_inv.as_slice()),
        residual("*C^h_ij", closed.c_mixed.as_slice(), oracle.c_mixed.as_slice()),
    ]
}

/// `max |*g^ik *g_kj − δ^i_j|` for the closed-form pair.
pub fn inverse_consistency(closed: &StarredTensors) -> f64 {
    let n = closed.g.nrows();
    let prod = &closed.g_inv * &closed.g - Matrix::identity(n, n);
    prod.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}
