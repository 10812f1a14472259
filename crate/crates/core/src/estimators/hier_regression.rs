//! Hierarchical linear regression across two datasets that share a design
//! space: a training set `(X̄, Ȳ)` for coefficients `β` and an auxiliary set
//! `(W, Z)` for coefficients `η`, with `β − η ~ N(0, 2σ_β² I)` and unit noise
//! in both.
//!
//! Predictions are compared on test rows `X`. The default is the OLS
//! prediction `θ̂ = X β̂` and the alternative the posterior mean of `Xβ`:
//!
//! ```text
//! θ* = X β̂ − X [I + Σ_β X̄ᵀX̄]⁻¹ (β̂ − η̂),   Σ_β = 2σ_β² I + (WᵀW)⁻¹
//! ```
//!
//! Viewed as an affine map of `θ̂` (with `β̂ = X†θ̂`) this is
//! `C = I − X B⁻¹ X†`, `ℓ = X B⁻¹ η̂`, `B = I + Σ_β X̄ᵀX̄`.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{inverse, spd_inverse, spd_solve, AffineForm};

#[derive(Debug, Clone, PartialEq)]
pub struct HierRegression {
    /// OLS prediction on the test rows.
    pub mle: DVector<f64>,
    /// Posterior-mean prediction on the test rows.
    pub estimate: DVector<f64>,
    /// Affine form of the alternative in terms of `θ̂`.
    pub form: AffineForm,
    /// Sampling covariance of `θ̂`, `X (X̄ᵀX̄)⁻¹ Xᵀ` (singular when `N > D`).
    pub covariance: DMatrix<f64>,
}

fn ols(x: &DMatrix<f64>, y: &DVector<f64>, what: &'static str) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_dim(what, x.nrows(), y.len())?;
    if x.nrows() < x.ncols() {
        return Err(Error::RankDeficient(what));
    }
    let gram = x.transpose() * x;
    let gram_inv = spd_inverse(&gram, "Gram matrix").map_err(|_| Error::RankDeficient(what))?;
    let smax = gram.symmetric_eigenvalues().max();
    let smin = gram.symmetric_eigenvalues().min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::RankDeficient(what));
    }
    Ok((&gram_inv * (x.transpose() * y), gram_inv))
}

pub fn hier_regression_posterior(
    train_x: &DMatrix<f64>,
    train_y: &DVector<f64>,
    aux_w: &DMatrix<f64>,
    aux_z: &DVector<f64>,
    test_x: &DMatrix<f64>,
    sigma_beta: f64,
) -> Result<HierRegression> {
    let d = train_x.ncols();
    check_dim("auxiliary design columns", d, aux_w.ncols())?;
    check_dim("test design columns", d, test_x.ncols())?;
    if !(sigma_beta > 0.0) || !sigma_beta.is_finite() {
        return Err(Error::invalid(format!("sigma_beta must be finite and positive, got {sigma_beta}")));
    }
    let (beta_hat, train_gram_inv) = ols(train_x, train_y, "training design")?;
    let (eta_hat, aux_gram_inv) = ols(aux_w, aux_z, "auxiliary design")?;
    let train_gram = train_x.transpose() * train_x;
    let sigma_b = DMatrix::identity(d, d) * (2.0 * sigma_beta * sigma_beta) + aux_gram_inv;
    let b = DMatrix::identity(d, d) + &sigma_b * &train_gram;
    let b_inv = inverse(&b, "hierarchical shrinkage matrix")?;

    let mle = test_x * &beta_hat;
    let estimate = test_x * (&beta_hat - &b_inv * (&beta_hat - &eta_hat));

    let n = test_x.nrows();
    // X† = (XᵀX)⁻¹Xᵀ needs X with full column rank; with N < D the affine
    // form is not defined.
    let test_gram = test_x.transpose() * test_x;
    let pinv = spd_solve(&test_gram, &test_x.transpose(), "test Gram matrix")
        .map_err(|_| Error::RankDeficient("test design"))?;
    let matrix = DMatrix::identity(n, n) - test_x * &b_inv * pinv;
    let offset = test_x * (&b_inv * &eta_hat);
    let covariance = test_x * train_gram_inv * test_x.transpose();
    Ok(HierRegression {
        mle,
        estimate,
        form: AffineForm::new(matrix, offset)?,
        covariance,
    })
}
