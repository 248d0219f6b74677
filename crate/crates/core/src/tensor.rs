//! Small dense tensors over an `n`-dimensional index range.
//!
//! Rank 1 and rank 2 objects use nalgebra's dynamic vectors and matrices.
//! Rank 3 objects get their own row-major container since nalgebra stops at
//! matrices.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::{DMatrix, DVector};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Rank-3 array `T[(i, j, k)]`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Rank3 {
    n: usize,
    data: Vec<f64>,
}

impl Rank3 {
    pub fn zeros(n: usize) -> Self {
        Rank3 {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    data.push(f(i, j, k));
                }
            }
        }
        Rank3 { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Contract the last index with `v`: `T_ij = T_ijk v^k`.
    pub fn contract_last(&self, v: &Vector) -> Matrix {
        let n = self.n;
        Matrix::from_fn(n, n, |i, j| (0..n).map(|k| self[(i, j, k)] * v[k]).sum())
    }

    /// Contract the first index with `v`: `T_jk = v^i T_ijk`.
    pub fn contract_first(&self, v: &Vector) -> Matrix {
        let n = self.n;
        Matrix::from_fn(n, n, |j, k| (0..n).map(|i| v[i] * self[(i, j, k)]).sum())
    }

    /// Raise (or lower) the first index: `S^i_jk = M^ir T_rjk`.
    pub fn raise_first(&self, m: &Matrix) -> Rank3 {
        let n = self.n;
        Rank3::from_fn(n, |i, j, k| (0..n).map(|r| m[(i, r)] * self[(r, j, k)]).sum())
    }

    /// Largest deviation from symmetry in the last two indices.
    pub fn asymmetry_last_two(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self[(i, j, k)] - self[(i, k, j)]).abs());
                }
            }
        }
        worst
    }

    /// Largest deviation from full permutation symmetry.
    pub fn asymmetry_full(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = self[(i, j, k)];
                    for w in [
                        self[(i, k, j)],
                        self[(j, i, k)],
                        self[(j, k, i)],
                        self[(k, i, j)],
                        self[(k, j, i)],
                    ] {
                        worst = worst.max((v - w).abs());
                    }
                }
            }
        }
        worst
    }

    pub fn scale(&self, s: f64) -> Rank3 {
        Rank3 {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }
}

impl Index<(usize, usize, usize)> for Rank3 {
    type Output = f64;

    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        &self.data[(i * self.n + j) * self.n + k]
    }
}

impl IndexMut<(usize, usize, usize)> for Rank3 {
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        &mut self.data[(i * self.n + j) * self.n + k]
    }
}

impl Add for &Rank3 {
    type Output = Rank3;

    fn add(self, rhs: &Rank3) -> Rank3 {
        assert_eq!(self.n, rhs.n, "rank-3 dimension mismatch");
        Rank3 {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Rank3 {
    type Output = Rank3;

    fn sub(self, rhs: &Rank3) -> Rank3 {
        assert_eq!(self.n, rhs.n, "rank-3 dimension mismatch");
        Rank3 {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<f64> for &Rank3 {
    type Output = Rank3;

    fn mul(self, s: f64) -> Rank3 {
        self.scale(s)
    }
}

/// `u_i v_j`
pub fn outer(u: &Vector, v: &Vector) -> Matrix {
    u * v.transpose()
}

/// `u_i v_j w_k`
pub fn outer3(u: &Vector, v: &Vector, w: &Vector) -> Rank3 {
    Rank3::from_fn(u.len(), |i, j, k| u[i] * v[j] * w[k])
}

/// `v_i M_jk + v_j M_ik + v_k M_ij`, the cyclic sum used throughout the
/// starred third-order tensors.
pub fn cyclic_sum(v: &Vector, m: &Matrix) -> Rank3 {
    Rank3::from_fn(v.len(), |i, j, k| {
        v[i] * m[(j, k)] + v[j] * m[(i, k)] + v[k] * m[(i, j)]
    })
}

pub fn max_abs_matrix(m: &Matrix) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_vector(v: &Vector) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_slice(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Largest absolute entrywise difference of two equally shaped slices.
/// NaN anywhere yields NaN so comparisons against a tolerance fail.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "shape mismatch");
    let mut worst: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = (x - y).abs();
        if d.is_nan() {
            return f64::NAN;
        }
        worst = worst.max(d);
    }
    worst
}

/// Absolute difference normalised by `max(1, |reference|_inf)`.
pub fn scaled_diff(value: &[f64], reference: &[f64]) -> f64 {
    max_abs_diff(value, reference) / max_abs_slice(reference).max(1.0)
}
