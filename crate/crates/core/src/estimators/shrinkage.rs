//! Normal-means shrinkage estimators and the SURE selector.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::AffineEstimate;
use crate::cvalue::Report;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{column_projector, AffineForm};
use crate::normal_means::SubspaceShrinkageSpec;

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("tau must be finite and positive, got {tau}")))
    }
}

/// `(y + τ⁻² ȳ 1)/(1 + τ⁻²)`: each coordinate pulled toward the grand mean.
pub fn lindley_smith(y: &DVector<f64>, tau: f64) -> Result<AffineEstimate> {
    check_tau(tau)?;
    let n = y.len();
    if n == 0 {
        return Err(Error::invalid("observation vector is empty"));
    }
    let prec = tau.powi(-2);
    let ybar = y.mean();
    let estimate = (y + DVector::from_element(n, prec * ybar)) / (1.0 + prec);
    let p_perp = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    let matrix = DMatrix::identity(n, n) - p_perp / (1.0 + tau * tau);
    Ok(AffineEstimate {
        estimate,
        form: AffineForm::linear(matrix)?,
    })
}

/// `(y + τ⁻² P_X y)/(1 + τ⁻²)`: shrinkage toward the column space of `X`.
pub fn morris_shrinkage(y: &DVector<f64>, x: &DMatrix<f64>, tau: f64) -> Result<AffineEstimate> {
    check_tau(tau)?;
    check_dim("design rows", y.len(), x.nrows())?;
    let n = y.len();
    let p = column_projector(x)?;
    let prec = tau.powi(-2);
    let matrix = (DMatrix::identity(n, n) + &p * prec) / (1.0 + prec);
    let estimate = &matrix * y;
    Ok(AffineEstimate {
        estimate,
        form: AffineForm::linear(matrix)?,
    })
}

/// The James–Stein estimate viewed as an empirical Bayes rule.
#[derive(Debug, Clone, PartialEq)]
pub struct JamesStein {
    pub estimate: DVector<f64>,
    /// Plug-in prior variance `τ̂² = max(0, ‖Y‖²/(N−2) − 1)`.
    pub tau_sq_hat: f64,
}

impl JamesStein {
    /// Shrinkage factor `τ̂²/(1 + τ̂²)` applied to `Y`.
    pub fn factor(&self) -> f64 {
        self.tau_sq_hat / (1.0 + self.tau_sq_hat)
    }
}

pub fn james_stein(y: &DVector<f64>) -> Result<JamesStein> {
    let n = y.len();
    if n <= 2 {
        return Err(Error::invalid(format!("James-Stein needs N > 2, got N = {n}")));
    }
    let tau_sq_hat = (y.norm_squared() / (n as f64 - 2.0) - 1.0).max(0.0);
    let factor = tau_sq_hat / (1.0 + tau_sq_hat);
    Ok(JamesStein {
        estimate: y * factor,
        tau_sq_hat,
    })
}

/// Bound specification for the James–Stein estimate against the MLE: the
/// origin-shrinkage bound with `τ` fixed at the plug-in `τ̂`.
pub fn james_stein_bound_spec(y: &DVector<f64>) -> Result<SubspaceShrinkageSpec> {
    let js = james_stein(y)?;
    SubspaceShrinkageSpec::origin(y.clone(), js.tau_sq_hat.sqrt())
}

/// How the SURE comparison is turned into a choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SureRule {
    /// Report the alternative when its estimated risk is below the MLE's
    /// risk `N`.
    #[default]
    RiskMinimizing,
    /// Report the alternative when its estimated risk exceeds `N`.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SureSelection {
    pub selected: Report,
    pub sure: f64,
}

/// SURE of the Lindley–Smith estimate `y − G y`, `G = (1+τ²)⁻¹ P₁^⊥`:
/// `N − 2 tr G + ‖G y‖²` with `tr G = (N−1)/(1+τ²)`.
pub fn sure_selector(y: &DVector<f64>, tau: f64, rule: SureRule) -> Result<SureSelection> {
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("tau must be positive, got {tau}")));
    }
    let n = y.len() as f64;
    let one_t2 = 1.0 + tau * tau;
    let resid_sq = y.iter().map(|v| (v - y.mean()).powi(2)).sum::<f64>();
    let sure = n - 2.0 * (n - 1.0) / one_t2 + resid_sq / (one_t2 * one_t2);
    let alternative = match rule {
        SureRule::RiskMinimizing => sure < n,
        SureRule::Literal => sure > n,
    };
    Ok(SureSelection {
        selected: if alternative { Report::Alternative } else { Report::Default },
        sure,
    })
}
