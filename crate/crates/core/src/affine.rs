//! Approximate win bound for two affine estimators `θ̂ = A y + k` and
//! `θ* = C y + ℓ` under correlated Gaussian noise `y ~ N(θ, Σ)`.
//!
//! With `G(y) = (A − C) y + k − ℓ` and `M = Σ^{1/2}(A − C)Σ^{1/2}` the win is
//! `‖θ̂ − y‖² − ‖θ* − y‖² + 2 εᵀG(y)`. The cross term has mean `tr[(A−C)Σ]`
//! and variance `‖G(θ)‖²_Σ + ½‖M + Mᵀ‖²_F`; the unknown `‖G(θ)‖²_Σ` is
//! replaced by a normal-approximation upper confidence limit `U`, the larger
//! root of a quadratic.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cvalue::LowerBound;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{is_symmetric, singular_values, sym_matrix_sqrt, AffineForm};
use crate::special_fn::{normal_quantile, Probability};

/// Universal constant of the Berry–Esseen inequality used by the correction.
pub const BERRY_ESSEEN_C1: f64 = 1.88;

/// Condition numbers above this trigger an ill-conditioning warning.
pub const ILL_CONDITIONED: f64 = 1e6;

/// Condition numbers above this are treated as infinite.
const SINGULAR_KAPPA: f64 = 1e13;

/// A fixed dataset `y` with covariance `Σ`, a default affine estimator
/// `(A, k)` and an alternative `(C, ℓ)`.
#[derive(Debug, Clone)]
pub struct AffineComparison {
    sigma: DMatrix<f64>,
    default: AffineForm,
    alternative: AffineForm,
    y: DVector<f64>,
}

impl AffineComparison {
    pub fn new(
        sigma: DMatrix<f64>,
        default: AffineForm,
        alternative: AffineForm,
        y: DVector<f64>,
    ) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::invalid("observation vector is empty"));
        }
        check_dim("covariance rows", n, sigma.nrows())?;
        check_dim("covariance columns", n, sigma.ncols())?;
        check_dim("default estimator", n, default.dim())?;
        check_dim("alternative estimator", n, alternative.dim())?;
        Ok(AffineComparison {
            sigma,
            default,
            alternative,
            y,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn default(&self) -> &AffineForm {
        &self.default
    }

    pub fn alternative(&self) -> &AffineForm {
        &self.alternative
    }

    pub fn default_estimate(&self) -> DVector<f64> {
        &self.default.matrix * &self.y + &self.default.offset
    }

    pub fn alternative_estimate(&self) -> DVector<f64> {
        &self.alternative.matrix * &self.y + &self.alternative.offset
    }

    /// `A − C`.
    pub fn difference(&self) -> DMatrix<f64> {
        &self.default.matrix - &self.alternative.matrix
    }

    /// `G(v) = (A − C) v + k − ℓ`.
    pub fn g(&self, v: &DVector<f64>) -> DVector<f64> {
        self.difference() * v + &self.default.offset - &self.alternative.offset
    }

    /// Both estimator matrices are symmetric (to 1e-10 relative).
    pub fn is_symmetric(&self) -> bool {
        is_symmetric(&self.default.matrix, 1e-10) && is_symmetric(&self.alternative.matrix, 1e-10)
    }

    /// Precomputes every α-independent quantity of the bound.
    pub fn functionals(&self) -> Result<AffineFunctionals> {
        let n = self.n();
        let root = sym_matrix_sqrt(&self.sigma)?;
        let diff = self.difference();
        let m = &root * &diff * &root;
        let sv = singular_values(&m);
        let frob_sq: f64 = sv.iter().map(|s| s * s).sum();
        let gram_frob_sq: f64 = sv.iter().map(|s| s.powi(4)).sum();
        let op_sq = sv[0] * sv[0];
        let trace_m2 = (&m * &m).trace();
        let sym_frob_sq = (2.0 * frob_sq + 2.0 * trace_m2).max(0.0);

        let theta_hat = self.default_estimate();
        let theta_star = self.alternative_estimate();
        let data_fit = (&theta_hat - &self.y).norm_squared() - (&theta_star - &self.y).norm_squared();
        let trace_term = 2.0 * (&diff * &self.sigma).trace();
        let g = self.g(&self.y);
        let g_sigma_sq = g.dot(&(&self.sigma * &g));

        let kappa = condition_number(&sv);
        let mut warnings = Vec::new();
        if !(kappa <= ILL_CONDITIONED) {
            warnings.push(format!(
                "condition number of the scaled difference matrix is {kappa:.3e}; the approximate bound may be loose"
            ));
        }
        Ok(AffineFunctionals {
            n,
            data_fit,
            trace_term,
            gamma: g_sigma_sq - frob_sq,
            rho: 2.0 * gram_frob_sq,
            nu: 4.0 * op_sq,
            half_sym_frob_sq: 0.5 * sym_frob_sq,
            kappa,
            warnings,
        })
    }
}

fn condition_number(sv: &DVector<f64>) -> f64 {
    let max = sv.max();
    let min = sv.min();
    if max == 0.0 {
        return f64::INFINITY;
    }
    let k = max / min;
    if k > SINGULAR_KAPPA || !k.is_finite() {
        f64::INFINITY
    } else {
        k
    }
}

/// Inputs of the quadratic whose larger root is `U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticUInputs {
    pub gamma: f64,
    pub eta: f64,
    pub rho: f64,
    pub nu: f64,
}

/// Larger root of `x² − (2γ + η²ν) x + (γ² − η²ρ) = 0`, floored at zero.
///
/// `U` is the supremum of `x ≥ 0` with `x − |η|√(ρ + νx) ≤ γ`. A negative
/// discriminant means no such `x` exists and `U = 0` is returned.
pub fn u_quadratic(inputs: QuadraticUInputs) -> Result<f64> {
    let QuadraticUInputs { gamma, eta, rho, nu } = inputs;
    if ![gamma, eta, rho, nu].iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("quadratic coefficients"));
    }
    if rho < 0.0 || nu < 0.0 {
        return Err(Error::invalid("rho and nu must be non-negative"));
    }
    let e2 = eta * eta;
    let b = 2.0 * gamma + e2 * nu;
    let c0 = gamma * gamma - e2 * rho;
    // Written as η²(4γν + η²ν² + 4ρ) to avoid cancelling b² against 4c.
    let inner = 4.0 * gamma * nu + e2 * nu * nu + 4.0 * rho;
    let scale = 4.0 * gamma.abs() * nu + e2 * nu * nu + 4.0 * rho;
    let disc = if inner >= 0.0 {
        e2 * inner
    } else if inner >= -1e-9 * scale {
        0.0
    } else {
        return Ok(0.0);
    };
    let sq = disc.sqrt();
    let root = if b >= 0.0 {
        0.5 * (b + sq)
    } else if b - sq != 0.0 {
        2.0 * c0 / (b - sq)
    } else {
        0.0
    };
    Ok(root.max(0.0))
}

/// Everything the bound needs besides `α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFunctionals {
    pub n: usize,
    /// `‖θ̂ − y‖² − ‖θ* − y‖²`.
    pub data_fit: f64,
    /// `2 tr[(A − C)Σ]`.
    pub trace_term: f64,
    /// `‖G(y)‖²_Σ − ‖M‖²_F`.
    pub gamma: f64,
    /// `2‖M Mᵀ‖²_F`.
    pub rho: f64,
    /// `4‖M‖²_op`.
    pub nu: f64,
    /// `½‖M + Mᵀ‖²_F`.
    pub half_sym_frob_sq: f64,
    /// Condition number of `M` (infinite when singular).
    pub kappa: f64,
    pub warnings: Vec<String>,
}

impl AffineFunctionals {
    /// `b(y, α)` for `0 ≤ α < 1`.
    pub fn bound(&self, alpha: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::ProbabilityDomain(alpha));
        }
        let eta = normal_quantile(Probability::open(0.5 * (1.0 - alpha))?)?;
        let u = u_quadratic(QuadraticUInputs {
            gamma: self.gamma,
            eta,
            rho: self.rho,
            nu: self.nu,
        })?;
        Ok(self.data_fit + self.trace_term + 2.0 * eta * (u + self.half_sym_frob_sq).sqrt())
    }
}

/// The approximate bound `b(y, α)`.
pub fn affine_win_bound(cmp: &AffineComparison, alpha: f64) -> Result<f64> {
    cmp.functionals()?.bound(alpha)
}

/// Berry–Esseen penalty on the coverage of the approximate bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerryEsseenCorrection {
    /// Condition number of `Σ^{1/2}(A − C)Σ^{1/2}`.
    pub kappa: f64,
    /// Condition number of `Σ^{1/2}(A + Aᵀ − C − Cᵀ)Σ^{1/2}`; only used when
    /// the estimator matrices are not symmetric.
    pub kappa_sym: Option<f64>,
    pub c1: f64,
    pub n: usize,
    pub epsilon: f64,
}

pub fn berry_esseen_epsilon(cmp: &AffineComparison) -> Result<BerryEsseenCorrection> {
    let root = sym_matrix_sqrt(cmp.sigma())?;
    let diff = cmp.difference();
    let m = &root * &diff * &root;
    let kappa = condition_number(&singular_values(&m));
    if !kappa.is_finite() {
        return Err(Error::ConditionUndefined);
    }
    let n = cmp.n();
    let sqrt_n = (n as f64).sqrt();
    if cmp.is_symmetric() {
        let epsilon = 10.0 * std::f64::consts::SQRT_2 / sqrt_n * BERRY_ESSEEN_C1 * kappa * kappa;
        return Ok(BerryEsseenCorrection {
            kappa,
            kappa_sym: None,
            c1: BERRY_ESSEEN_C1,
            n,
            epsilon,
        });
    }
    let sym = &root * (&diff + diff.transpose()) * &root;
    let kappa_sym = condition_number(&singular_values(&sym));
    if !kappa_sym.is_finite() {
        return Err(Error::ConditionUndefined);
    }
    let epsilon = 5.0 * std::f64::consts::SQRT_2 / sqrt_n * BERRY_ESSEEN_C1 * (kappa * kappa + kappa_sym);
    Ok(BerryEsseenCorrection {
        kappa,
        kappa_sym: Some(kappa_sym),
        c1: BERRY_ESSEEN_C1,
        n,
        epsilon,
    })
}

/// [`AffineFunctionals`] as a [`LowerBound`], optionally shifted by a
/// Berry–Esseen correction: the corrected bound at `α` is the uncorrected
/// bound at `α + ε`, or `−∞` once `α + ε ≥ 1`.
#[derive(Debug, Clone)]
pub struct AffineBound {
    pub functionals: AffineFunctionals,
    pub correction: Option<f64>,
}

impl AffineBound {
    pub fn new(cmp: &AffineComparison) -> Result<Self> {
        Ok(AffineBound {
            functionals: cmp.functionals()?,
            correction: None,
        })
    }

    pub fn with_berry_esseen(cmp: &AffineComparison) -> Result<Self> {
        let eps = berry_esseen_epsilon(cmp)?.epsilon;
        Ok(AffineBound {
            functionals: cmp.functionals()?,
            correction: Some(eps),
        })
    }
}

impl LowerBound for AffineBound {
    fn evaluate(&self, alpha: f64) -> Result<f64> {
        match self.correction {
            None => self.functionals.bound(alpha),
            Some(eps) => {
                let shifted = alpha + eps;
                if shifted >= 1.0 {
                    Ok(f64::NEG_INFINITY)
                } else {
                    self.functionals.bound(shifted)
                }
            }
        }
    }
}
