//! Logistic regression with labels in `{+1, −1}`: the MLE, the MAP under a
//! standard normal prior, and the Laplace-approximate Bayes estimate
//! `θ̃* = (I + Σ̃)⁻¹ θ̂` with `Σ̃` the inverse Hessian at the MLE.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{spd_inverse, spd_solve, symmetrize, AffineForm};

const GRAD_TOL: f64 = 1e-10;
const MAX_NEWTON: usize = 100;
const SEPARATION_NORM: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticData {
    /// `M × N` covariates, one row per observation.
    pub x: DMatrix<f64>,
    /// Labels in `{+1, −1}`.
    pub y: DVector<f64>,
}

impl LogisticData {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        check_dim("labels", x.nrows(), y.len())?;
        if let Some(bad) = y.iter().position(|v| *v != 1.0 && *v != -1.0) {
            return Err(Error::invalid(format!("label in row {bad} is {}, expected +1 or -1", y[bad])));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("logistic covariates"));
        }
        Ok(LogisticData { x, y })
    }

    pub fn n_obs(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.x.ncols()
    }
}

/// `log(1 + e^{−u})` without overflow.
fn log1p_exp_neg(u: f64) -> f64 {
    if u > 0.0 {
        (-u).exp().ln_1p()
    } else {
        -u + u.exp().ln_1p()
    }
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Negative log posterior (or likelihood when `ridge == 0`), its gradient
/// and Hessian.
struct Objective<'a> {
    data: &'a LogisticData,
    ridge: f64,
}

impl Objective<'_> {
    fn value(&self, theta: &DVector<f64>) -> f64 {
        let margins = &self.data.x * theta;
        let nll: f64 = margins.iter().zip(self.data.y.iter()).map(|(m, y)| log1p_exp_neg(y * m)).sum();
        nll + 0.5 * self.ridge * theta.norm_squared()
    }

    fn gradient(&self, theta: &DVector<f64>) -> DVector<f64> {
        let margins = &self.data.x * theta;
        let w = DVector::from_iterator(
            margins.len(),
            margins.iter().zip(self.data.y.iter()).map(|(m, y)| -y * sigmoid(-y * m)),
        );
        self.data.x.transpose() * w + theta * self.ridge
    }

    fn hessian(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let margins = &self.data.x * theta;
        let mut weighted = self.data.x.clone();
        for (i, mut row) in weighted.row_iter_mut().enumerate() {
            let p = sigmoid(margins[i]);
            row *= p * (1.0 - p);
        }
        let n = theta.len();
        symmetrize(&(self.data.x.transpose() * weighted)) + DMatrix::identity(n, n) * self.ridge
    }
}

/// Damped Newton with step halving on the objective. With separation
/// detection on, a stationary point that classifies every observation
/// correctly is rejected: such a point only exists for separable data, where
/// the likelihood has no maximizer and the gradient merely underflows.
fn newton(obj: &Objective, detect_separation: bool) -> Result<DVector<f64>> {
    let theta = newton_iterate(obj, detect_separation)?;
    if detect_separation {
        let margins = &obj.data.x * &theta;
        let separated = margins.iter().zip(obj.data.y.iter()).all(|(m, y)| y * m > 0.0);
        if separated && theta.norm() > 0.0 {
            return Err(Error::Separation { norm: theta.norm() });
        }
    }
    Ok(theta)
}

fn newton_iterate(obj: &Objective, detect_separation: bool) -> Result<DVector<f64>> {
    let n = obj.data.n_params();
    let mut theta = DVector::zeros(n);
    let mut value = obj.value(&theta);
    for _ in 0..MAX_NEWTON {
        let grad = obj.gradient(&theta);
        let gnorm = grad.norm();
        if gnorm <= GRAD_TOL {
            return Ok(theta);
        }
        if detect_separation && theta.norm() > SEPARATION_NORM {
            return Err(Error::Separation { norm: theta.norm() });
        }
        let h = obj.hessian(&theta);
        let step = match spd_solve(&h, &DMatrix::from_column_slice(n, 1, grad.as_slice()), "logistic Hessian") {
            Ok(s) => s.column(0).into_owned(),
            Err(_) if detect_separation && theta.norm() > 1.0 => {
                return Err(Error::Separation { norm: theta.norm() })
            }
            Err(e) => return Err(e),
        };
        // Near the optimum the decrease Newton predicts is below the
        // resolution of the objective and the line search cannot see it; the
        // full step is taken there.
        let predicted = grad.dot(&step);
        if predicted <= 1e-12 * value.abs().max(1.0) {
            theta -= &step;
            value = obj.value(&theta);
            continue;
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &theta - &step * t;
            let v = obj.value(&cand);
            if v <= value {
                theta = cand;
                value = v;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // No descent possible at working precision; accept if stationary
            // to the attainable accuracy.
            if gnorm <= 1e-8 {
                return Ok(theta);
            }
            return Err(Error::NoConvergence {
                what: "logistic Newton line search",
                iterations: MAX_NEWTON,
            });
        }
    }
    let grad = obj.gradient(&theta);
    if grad.norm() <= GRAD_TOL {
        return Ok(theta);
    }
    if detect_separation && theta.norm() > SEPARATION_NORM / 10.0 {
        return Err(Error::Separation { norm: theta.norm() });
    }
    Err(Error::NoConvergence {
        what: "logistic Newton iteration",
        iterations: MAX_NEWTON,
    })
}

/// Maximum-likelihood estimate.
pub fn logistic_mle(data: &LogisticData) -> Result<DVector<f64>> {
    if data.n_obs() < data.n_params() {
        return Err(Error::invalid(format!(
            "the MLE needs at least as many observations ({}) as parameters ({})",
            data.n_obs(),
            data.n_params()
        )));
    }
    newton(&Objective { data, ridge: 0.0 }, true)
}

/// MAP estimate under `θ ~ N(0, I)`.
pub fn logistic_map(data: &LogisticData) -> Result<DVector<f64>> {
    newton(&Objective { data, ridge: 1.0 }, false)
}

/// Norm of the log-likelihood gradient (`ridge = 0`) or of the log-posterior
/// gradient (`ridge = 1`).
pub fn logistic_gradient_norm(data: &LogisticData, theta: &DVector<f64>, ridge: f64) -> f64 {
    Objective { data, ridge }.gradient(theta).norm()
}

/// Laplace approximation around the MLE.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceAffine {
    pub mle: DVector<f64>,
    /// Inverse observed information at the MLE.
    pub sigma_tilde: DMatrix<f64>,
    /// `(I + Σ̃)⁻¹`.
    pub shrink: DMatrix<f64>,
    /// `θ̃* = (I + Σ̃)⁻¹ θ̂`.
    pub estimate: DVector<f64>,
}

impl LaplaceAffine {
    /// The default (`A = I, k = 0`) as an affine form of `θ̂`.
    pub fn default_form(&self) -> AffineForm {
        AffineForm::identity(self.mle.len())
    }

    /// The alternative (`C = (I + Σ̃)⁻¹, ℓ = 0`) as an affine form of `θ̂`.
    pub fn alternative_form(&self) -> AffineForm {
        AffineForm::linear(self.shrink.clone()).expect("square")
    }
}

pub fn logistic_laplace_affine(data: &LogisticData) -> Result<LaplaceAffine> {
    let mle = logistic_mle(data)?;
    laplace_at(data, mle)
}

/// Laplace construction around a previously computed MLE.
pub fn laplace_at(data: &LogisticData, mle: DVector<f64>) -> Result<LaplaceAffine> {
    let n = data.n_params();
    check_dim("MLE", n, mle.len())?;
    let h = Objective { data, ridge: 0.0 }.hessian(&mle);
    let sigma_tilde = spd_inverse(&h, "logistic Hessian")?;
    let shrink = spd_inverse(&(DMatrix::identity(n, n) + &sigma_tilde), "I + inverse Hessian")?;
    let estimate = &shrink * &mle;
    Ok(LaplaceAffine {
        mle,
        sigma_tilde,
        shrink,
        estimate,
    })
}
