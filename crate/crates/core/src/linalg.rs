//! Dense linear-algebra helpers shared by the bounds and the estimators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, Error, Result};

/// Relative eigenvalue threshold below which a covariance is declared
/// indefinite rather than clamped to zero.
pub const PSD_CLAMP: f64 = 1e-10;

/// An affine map `y ↦ M y + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm {
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl AffineForm {
    pub fn new(matrix: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::invalid("affine estimator matrix must be square"));
        }
        check_dim("affine offset", matrix.nrows(), offset.len())?;
        Ok(AffineForm { matrix, offset })
    }

    pub fn linear(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        Self::new(matrix, DVector::zeros(n))
    }

    /// The maximum-likelihood estimate `θ̂ = y`.
    pub fn identity(n: usize) -> Self {
        AffineForm {
            matrix: DMatrix::identity(n, n),
            offset: DVector::zeros(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn apply(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("affine input", self.dim(), y.len())?;
        Ok(&self.matrix * y + &self.offset)
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Max-abs asymmetry relative to the largest entry.
pub fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    (m - m.transpose()).amax() <= rel_tol * scale
}

/// Eigendecomposition of a symmetric PSD matrix with tiny negative
/// eigenvalues clamped to zero.
pub fn psd_eigen(sigma: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if !sigma.is_square() {
        return Err(Error::invalid("covariance must be square"));
    }
    if !is_symmetric(sigma, 1e-9) {
        return Err(Error::invalid("covariance must be symmetric"));
    }
    if sigma.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("covariance"));
    }
    let mut eig = SymmetricEigen::new(symmetrize(sigma));
    let max = eig.eigenvalues.max().max(0.0);
    let min = eig.eigenvalues.min();
    if min < -PSD_CLAMP * max || (max == 0.0 && min < 0.0) {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min,
            max_eigenvalue: max,
        });
    }
    eig.eigenvalues.apply(|v| *v = v.max(0.0));
    Ok(eig)
}

/// Symmetric square root `S` of a PSD matrix, `S S = Σ`.
pub fn sym_matrix_sqrt(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = psd_eigen(sigma)?;
    let roots = eig.eigenvalues.map(f64::sqrt);
    let q = &eig.eigenvectors;
    let scaled = q * DMatrix::from_diagonal(&roots);
    Ok(symmetrize(&(scaled * q.transpose())))
}

/// Orthogonal projector onto the column space of `x`, checking full column
/// rank. A matrix with zero columns projects onto `{0}`.
pub fn column_projector(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let d = x.ncols();
    if d == 0 {
        return Ok(DMatrix::zeros(n, n));
    }
    if d >= n {
        return Err(Error::invalid(format!(
            "design has {d} columns but only {n} rows; need N > D"
        )));
    }
    let svd = x.clone().svd(true, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::RankDeficient("design matrix"));
    }
    let u = svd.u.expect("requested U");
    Ok(&u * u.transpose())
}

/// Singular values of `m`, from the eigenvalues of `mᵀm` (descending).
pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    let gram = m.transpose() * m;
    let eig = SymmetricEigen::new(symmetrize(&gram));
    let mut s: Vec<f64> = eig.eigenvalues.iter().map(|v| v.max(0.0).sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    DVector::from_vec(s)
}

/// Solve `a x = b` for symmetric positive definite `a` by Cholesky.
pub fn spd_solve(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let chol = nalgebra::Cholesky::new(symmetrize(a))
        .ok_or_else(|| Error::Singular(format!("{what} is not positive definite")))?;
    Ok(chol.solve(b))
}

/// Inverse of a symmetric positive definite matrix.
pub fn spd_inverse(a: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    Ok(symmetrize(&spd_solve(a, &DMatrix::identity(n, n), what)?))
}

/// General square inverse via LU.
pub fn inverse(a: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("{what} is not invertible")))
}
