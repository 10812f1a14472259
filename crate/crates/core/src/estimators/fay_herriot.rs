//! Fay–Herriot small-area model: `y_n ~ N(θ_n, v_n)`, `θ ~ N(Xβ, τ² I)`,
//! and an in-house maximum-likelihood fit of its hyperparameters.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::AffineEstimate;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{spd_solve, AffineForm};

/// Posterior mean `[I + τ⁻²Σ]⁻¹ y + [I + τ²Σ⁻¹]⁻¹ Xβ` for diagonal
/// `Σ = diag(noise_var)`.
pub fn fay_herriot_mean(
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    beta: &DVector<f64>,
    tau: f64,
    noise_var: &DVector<f64>,
) -> Result<AffineEstimate> {
    let n = y.len();
    check_dim("design rows", n, x.nrows())?;
    check_dim("coefficients", x.ncols(), beta.len())?;
    check_dim("noise variances", n, noise_var.len())?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::invalid(format!("tau must be finite and positive, got {tau}")));
    }
    if noise_var.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid("noise variances must be finite and positive"));
    }
    let t2 = tau * tau;
    let weight = noise_var.map(|v| t2 / (t2 + v));
    let prior_mean = x * beta;
    let offset = prior_mean.zip_map(&weight, |m, w| (1.0 - w) * m);
    let form = AffineForm::new(DMatrix::from_diagonal(&weight), offset)?;
    Ok(AffineEstimate {
        estimate: form.apply(y)?,
        form,
    })
}

/// Generalized least squares `(XᵀWX)⁻¹XᵀWy` with `W = diag(1/var)`.
pub fn fay_herriot_gls(y: &DVector<f64>, x: &DMatrix<f64>, var: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim("design rows", y.len(), x.nrows())?;
    check_dim("variances", y.len(), var.len())?;
    let mut xw = x.transpose();
    for (j, mut col) in xw.column_iter_mut().enumerate() {
        col /= var[j];
    }
    let lhs = &xw * x;
    let rhs = &xw * y;
    let sol = spd_solve(&lhs, &DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice()), "weighted Gram matrix")
        .map_err(|_| Error::RankDeficient("design matrix"))?;
    Ok(sol.column(0).into_owned())
}

/// How the overall noise scale enters the fit. Observation variances are
/// `σ² d_n` for known relative variances `d_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScale {
    /// `σ` is estimated jointly by profile likelihood.
    Profiled,
    /// `σ` is known.
    Known(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FayHerriotFit {
    pub beta: DVector<f64>,
    pub tau: f64,
    pub sigma: f64,
    pub iterations: usize,
}

impl FayHerriotFit {
    /// Per-area noise variances `σ² d_n` implied by the fit.
    pub fn noise_var(&self, rel_var: &DVector<f64>) -> DVector<f64> {
        rel_var * self.sigma.powi(2)
    }
}

const MAX_FIT_ITER: usize = 500;
const LOG_RANGE: f64 = 18.420680743952367; // ln(1e8)
const FIT_GRID: usize = 80;

/// Maximum marginal likelihood for `(β, τ²)` with `β` in closed form (GLS)
/// and `σ²` either known or profiled out. The one remaining scalar is
/// located on a log grid and refined by golden-section search.
pub fn eb_fit_fay_herriot(
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    rel_var: &DVector<f64>,
    noise: NoiseScale,
) -> Result<FayHerriotFit> {
    let n = y.len();
    check_dim("design rows", n, x.nrows())?;
    check_dim("relative variances", n, rel_var.len())?;
    if n <= x.ncols() + 2 {
        return Err(Error::invalid(format!(
            "need N > D + 2 to fit the model, got N = {n}, D = {}",
            x.ncols()
        )));
    }
    if rel_var.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid("relative variances must be finite and positive"));
    }
    let nf = n as f64;
    let mean_d = rel_var.mean();

    // Returns (negative log-likelihood, β, σ²) at log-parameter `s`.
    let eval = |s: f64| -> Result<(f64, DVector<f64>, f64)> {
        let (total_var, sigma2) = match noise {
            NoiseScale::Profiled => (rel_var.add_scalar(s.exp()), None),
            NoiseScale::Known(sigma) => (rel_var * sigma.powi(2) + DVector::from_element(n, s.exp()), Some(sigma.powi(2))),
        };
        let beta = fay_herriot_gls(y, x, &total_var)?;
        let resid = y - x * &beta;
        let quad: f64 = resid.iter().zip(total_var.iter()).map(|(e, v)| e * e / v).sum();
        let log_det: f64 = total_var.iter().map(|v| v.ln()).sum();
        match sigma2 {
            None => {
                let s2 = quad / nf;
                Ok((0.5 * (nf * s2.ln() + log_det), beta, s2))
            }
            Some(s2) => Ok((0.5 * (log_det + quad), beta, s2)),
        }
    };

    let centre = match noise {
        NoiseScale::Profiled => 0.0,
        NoiseScale::Known(sigma) => {
            if !(sigma > 0.0) || !sigma.is_finite() {
                return Err(Error::invalid(format!("known sigma must be positive, got {sigma}")));
            }
            (sigma * sigma * mean_d).ln()
        }
    };
    let (lo, hi) = (centre - LOG_RANGE, centre + LOG_RANGE);
    let grid: Vec<f64> = (0..=FIT_GRID).map(|i| lo + (hi - lo) * i as f64 / FIT_GRID as f64).collect();
    let mut values = Vec::with_capacity(grid.len());
    for &s in &grid {
        values.push(eval(s)?.0);
    }
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("grid is non-empty");

    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(FIT_GRID)];
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = eval(c)?.0;
    let mut fd = eval(d)?.0;
    let mut iterations = FIT_GRID + 3;
    while b - a > 1e-10 {
        if iterations >= MAX_FIT_ITER {
            return Err(Error::NoConvergence {
                what: "Fay-Herriot likelihood maximization",
                iterations,
            });
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = eval(c)?.0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = eval(d)?.0;
        }
        iterations += 1;
    }
    let s_opt = if values[best] < fc.min(fd) { grid[best] } else if fc <= fd { c } else { d };
    let (_, beta, sigma2) = eval(s_opt)?;
    let tau2 = match noise {
        NoiseScale::Profiled => s_opt.exp() * sigma2,
        NoiseScale::Known(_) => s_opt.exp(),
    };
    Ok(FayHerriotFit {
        beta,
        tau: tau2.sqrt(),
        sigma: sigma2.sqrt(),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design() -> DMatrix<f64> {
        DMatrix::from_fn(12, 2, |i, j| if j == 0 { 1.0 } else { (i as f64 * 0.7).cos() })
    }

    #[test]
    fn vanishing_noise_returns_data() {
        let x = design();
        let y = DVector::from_fn(12, |i, _| (i as f64).sqrt());
        let beta = DVector::from_vec(vec![0.5, -1.0]);
        let e = fay_herriot_mean(&y, &x, &beta, 1.0, &DVector::from_element(12, 1e-8)).unwrap();
        assert!((e.estimate - &y).amax() < 1e-7);
    }

    #[test]
    fn vanishing_tau_returns_prior_mean() {
        let x = design();
        let y = DVector::from_fn(12, |i, _| (i as f64).sqrt());
        let beta = DVector::from_vec(vec![0.5, -1.0]);
        let e = fay_herriot_mean(&y, &x, &beta, 1e-9, &DVector::from_element(12, 0.3)).unwrap();
        assert!((e.estimate - &x * &beta).amax() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_variances() {
        let x = design();
        let y = DVector::zeros(12);
        let beta = DVector::zeros(2);
        let mut v = DVector::from_element(12, 1.0);
        v[3] = 0.0;
        assert!(fay_herriot_mean(&y, &x, &beta, 1.0, &v).is_err());
        assert!(fay_herriot_mean(&y, &x, &beta, 0.0, &DVector::from_element(12, 1.0)).is_err());
    }

    #[test]
    fn gls_with_orthonormal_design_is_projection() {
        let x = design();
        let q = x.clone().qr().q();
        let y = DVector::from_fn(12, |i, _| (i as f64 * 1.3).sin());
        let beta = fay_herriot_gls(&y, &q, &DVector::from_element(12, 2.5)).unwrap();
        assert!((beta - q.transpose() * &y).amax() < 1e-12);
    }

    #[test]
    fn fit_is_deterministic_and_sane() {
        let x = design();
        let y = DVector::from_fn(12, |i, _| 1.0 + (i as f64 * 2.1).sin());
        let d = DVector::from_fn(12, |i, _| 0.5 + 0.1 * i as f64);
        let a = eb_fit_fay_herriot(&y, &x, &d, NoiseScale::Profiled).unwrap();
        let b = eb_fit_fay_herriot(&y, &x, &d, NoiseScale::Profiled).unwrap();
        assert_eq!(a, b);
        assert!(a.tau >= 0.0 && a.sigma > 0.0);
        assert!(a.iterations <= MAX_FIT_ITER);
        let k = eb_fit_fay_herriot(&y, &x, &d, NoiseScale::Known(1.0)).unwrap();
        assert_eq!(k.sigma, 1.0);
        assert!(eb_fit_fay_herriot(&y.rows(0, 4).into_owned(), &x.rows(0, 4).into_owned(), &d.rows(0, 4).into_owned(), NoiseScale::Profiled).is_err());
    }
}
