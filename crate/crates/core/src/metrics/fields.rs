use crate::diffkit::Real;
use crate::error::{GeometryError, Result};
use crate::tensor::{Matrix, Vector};

/// Position-dependent symmetric positive-definite matrix `a_ij(x)`.
#[derive(Clone, Debug, PartialEq)]
pub enum MatrixField {
    Constant(Matrix),
    /// `a_ij(x) = exp(2 s·x) A_ij`
    Conformal { matrix: Matrix, slope: Vector },
}

impl MatrixField {
    pub fn identity(n: usize) -> Self {
        MatrixField::Constant(Matrix::identity(n, n))
    }

    /// `exp(2 s·x) δ_ij`
    pub fn conformal_euclidean(slope: Vector) -> Self {
        let n = slope.len();
        MatrixField::Conformal {
            matrix: Matrix::identity(n, n),
            slope,
        }
    }

    pub fn new_constant(matrix: Matrix) -> Result<Self> {
        check_spd(&matrix)?;
        Ok(MatrixField::Constant(matrix))
    }

    pub fn new_conformal(matrix: Matrix, slope: Vector) -> Result<Self> {
        check_spd(&matrix)?;
        if slope.len() != matrix.nrows() {
            return Err(GeometryError::InvalidParameter(format!(
                "conformal slope has {} components for a {}x{} matrix",
                slope.len(),
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(MatrixField::Conformal { matrix, slope })
    }

    pub fn dim(&self) -> usize {
        match self {
            MatrixField::Constant(m) => m.nrows(),
            MatrixField::Conformal { matrix, .. } => matrix.nrows(),
        }
    }

    fn base(&self) -> &Matrix {
        match self {
            MatrixField::Constant(m) => m,
            MatrixField::Conformal { matrix, .. } => matrix,
        }
    }

    /// `a_ij(x) y^i y^j`
    pub fn quadratic<T: Real>(&self, x: &[T], y: &[T]) -> T {
        let a = self.base();
        let n = a.nrows();
        let mut q = T::constant(0.0);
        for i in 0..n {
            for j in 0..n {
                let aij = a[(i, j)];
                if aij != 0.0 {
                    q = q + y[i] * y[j] * aij;
                }
            }
        }
        match self {
            MatrixField::Constant(_) => q,
            MatrixField::Conformal { slope, .. } => {
                let mut s = T::constant(0.0);
                for (a, xa) in x.iter().enumerate() {
                    s = s + *xa * slope[a];
                }
                (s * 2.0).exp() * q
            }
        }
    }

    pub fn at(&self, x: &[f64]) -> Matrix {
        match self {
            MatrixField::Constant(m) => m.clone(),
            MatrixField::Conformal { matrix, slope } => {
                let s: f64 = slope.iter().zip(x).map(|(a, b)| a * b).sum();
                matrix * (2.0 * s).exp()
            }
        }
    }
}

fn check_spd(m: &Matrix) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() < 2 {
        return Err(GeometryError::InvalidParameter(format!(
            "expected a square matrix of size >= 2, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if (m - m.transpose()).amax() > 1e-14 * m.amax().max(1.0) {
        return Err(GeometryError::InvalidParameter("matrix is not symmetric".into()));
    }
    if m.clone().cholesky().is_none() {
        return Err(GeometryError::InvalidParameter("matrix is not positive definite".into()));
    }
    Ok(())
}

/// Affine covector field `a_i(x) = offset_i + slope_ij x^j`.
///
/// A symmetric slope makes the field the gradient of
/// `offset·x + ½ xᵀ slope x`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovectorField {
    pub offset: Vector,
    pub slope: Matrix,
}

impl CovectorField {
    pub fn constant(offset: Vector) -> Self {
        let n = offset.len();
        CovectorField {
            offset,
            slope: Matrix::zeros(n, n),
        }
    }

    pub fn zero(n: usize) -> Self {
        Self::constant(Vector::zeros(n))
    }

    pub fn affine(offset: Vector, slope: Matrix) -> Result<Self> {
        let n = offset.len();
        if slope.nrows() != n || slope.ncols() != n {
            return Err(GeometryError::InvalidParameter(format!(
                "covector slope must be {n}x{n}, got {}x{}",
                slope.nrows(),
                slope.ncols()
            )));
        }
        Ok(CovectorField { offset, slope })
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn is_constant(&self) -> bool {
        self.slope.iter().all(|v| *v == 0.0)
    }

    pub fn is_gradient(&self) -> bool {
        (&self.slope - self.slope.transpose()).amax() <= 1e-14 * self.slope.amax().max(1.0)
    }

    pub fn is_zero(&self) -> bool {
        self.is_constant() && self.offset.iter().all(|v| *v == 0.0)
    }

    pub fn component<T: Real>(&self, i: usize, x: &[T]) -> T {
        let mut v = T::constant(self.offset[i]);
        for (j, xj) in x.iter().enumerate() {
            let s = self.slope[(i, j)];
            if s != 0.0 {
                v = v + *xj * s;
            }
        }
        v
    }

    /// `a_i(x) y^i`
    pub fn contract<T: Real>(&self, x: &[T], y: &[T]) -> T {
        let mut acc = T::constant(0.0);
        for (i, yi) in y.iter().enumerate() {
            acc = acc + self.component(i, x) * *yi;
        }
        acc
    }

    pub fn at(&self, x: &[f64]) -> Vector {
        Vector::from_fn(self.dim(), |i, _| self.component(i, x))
    }

    /// `∂_j a_i` as `[(i, j)]`.
    pub fn jacobian(&self) -> &Matrix {
        &self.slope
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conformal_factor_is_one_at_origin() {
        let f = MatrixField::conformal_euclidean(Vector::from_vec(vec![1.0, 0.0]));
        assert_eq!(f.at(&[0.0, 0.0]), Matrix::identity(2, 2));
        let q: f64 = f.quadratic(&[0.5, 3.0], &[1.0, 2.0]);
        assert!((q - 5.0 * 1f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn rejects_indefinite_matrix() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(MatrixField::new_constant(m).is_err());
        let m = Matrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(MatrixField::new_constant(m).is_err());
    }

    #[test]
    fn affine_covector() {
        let f = CovectorField::affine(
            Vector::from_vec(vec![0.1, 0.2]),
            Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -1.0]),
        )
        .unwrap();
        assert!(f.is_gradient() && !f.is_constant());
        let a = f.at(&[1.0, 2.0]);
        assert!((a[0] - 2.1).abs() < 1e-15 && (a[1] + 1.3).abs() < 1e-15);
        let c: f64 = f.contract(&[1.0, 2.0], &[1.0, 1.0]);
        assert!((c - 0.8).abs() < 1e-15);
    }
}
