//! Standard normal and (non-)central chi-squared distribution functions.
//!
//! The non-central chi-squared CDF is evaluated as a Poisson mixture of
//! central chi-squared CDFs, summed outward from the Poisson mode. Only one
//! regularized incomplete gamma call is made; the rest of the series is
//! obtained from the recurrence `P(a+1, x) = P(a, x) - x^a e^{-x} / Γ(a+1)`.

use serde::{Deserialize, Serialize};
use libm::erfc;
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};

/// Largest degrees of freedom accepted by [`ChiSqParams::new`].
pub const MAX_DF: u32 = 1000;
/// Largest noncentrality accepted by [`ChiSqParams::new`].
pub const MAX_NONCENTRALITY: f64 = 1.0e4;

/// Truncation threshold for the Poisson tail mass that is dropped.
const TAIL_MASS: f64 = 1.0e-15;

/// A probability, checked to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(p: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&p) {
            Ok(Probability(p))
        } else {
            Err(Error::ProbabilityDomain(p))
        }
    }

    /// Like [`Probability::new`] but additionally rejects 0 and 1.
    pub fn open(p: f64) -> Result<Self> {
        if p > 0.0 && p < 1.0 {
            Ok(Probability(p))
        } else {
            Err(Error::ProbabilityDomain(p))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        Probability::new(p)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Parameters of a non-central chi-squared distribution, `χ²_df(λ)`.
///
/// The convention is the usual one: the sum of `df` squared unit-variance
/// normals whose means have squared norm `lambda`, so the mean is
/// `df + lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSqParams {
    df: u32,
    lambda: f64,
}

impl ChiSqParams {
    pub fn new(df: u32, lambda: f64) -> Result<Self> {
        if df == 0 {
            return Err(Error::invalid("chi-squared degrees of freedom must be at least 1"));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::invalid(format!(
                "noncentrality must be finite and non-negative, got {lambda}"
            )));
        }
        if df > MAX_DF {
            return Err(Error::OutOfRange(format!(
                "degrees of freedom {df} exceed the supported maximum {MAX_DF}"
            )));
        }
        if lambda > MAX_NONCENTRALITY {
            return Err(Error::OutOfRange(format!(
                "noncentrality {lambda} exceeds the supported maximum {MAX_NONCENTRALITY}"
            )));
        }
        Ok(ChiSqParams { df, lambda })
    }

    pub fn central(df: u32) -> Result<Self> {
        Self::new(df, 0.0)
    }

    pub fn df(&self) -> u32 {
        self.df
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile `z_p`, defined for `0 < p < 1`.
pub fn normal_quantile(p: Probability) -> Result<f64> {
    let p = p.value();
    if p <= 0.0 || p >= 1.0 {
        return Err(Error::ProbabilityDomain(p));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Work in the lower tail and reflect so the Newton polish never has to
    // resolve 1 - p near 1.
    let (q, sign) = if p < 0.5 { (p, -1.0) } else { (1.0 - p, 1.0) };
    let mut z = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * q);
    let resid = normal_cdf(z) - q;
    let dens = normal_pdf(z);
    if dens > 0.0 {
        z -= resid / dens;
    }
    Ok(-sign * z)
}

/// Value and density of a chi-squared mixture component sum.
struct CdfPdf {
    cdf: f64,
    pdf: f64,
}

/// `ln(x^a e^{-x} / Γ(a+1))`, the log of `P(a, x) - P(a+1, x)`.
fn ln_gamma_step(a: f64, ln_x2: f64, x2: f64) -> f64 {
    a * ln_x2 - x2 - ln_gamma(a + 1.0)
}

fn cdf_pdf(x: f64, params: ChiSqParams) -> CdfPdf {
    if !(x > 0.0) {
        return CdfPdf { cdf: 0.0, pdf: 0.0 };
    }
    if x.is_infinite() {
        return CdfPdf { cdf: 1.0, pdf: 0.0 };
    }
    let x2 = 0.5 * x;
    let ln_x2 = x2.ln();
    let half_df = 0.5 * params.df as f64;
    let mu = 0.5 * params.lambda;

    if mu == 0.0 {
        let cdf = gamma_lr(half_df, x2);
        let pdf = 0.5 * ((half_df - 1.0) * ln_x2 - x2 - ln_gamma(half_df)).exp();
        return CdfPdf { cdf, pdf };
    }

    // Component j of the mixture is a Gamma(df/2 + j) CDF at x/2 with
    // Poisson(mu) weight; its density contribution is t(a - 1) / 2.
    let j0 = mu.floor();
    let a0 = half_df + j0;
    let ln_w0 = -mu + j0 * mu.ln() - ln_gamma(j0 + 1.0);
    let w0 = ln_w0.exp();
    let p0 = gamma_lr(a0, x2);
    let lt0 = ln_gamma_step(a0, ln_x2, x2);
    let density_term = |lt: f64, a: f64| 0.5 * (lt + a.ln() - ln_x2).exp();

    let mut cdf = w0 * p0;
    let mut pdf = w0 * density_term(lt0, a0);

    // Upward from the mode.
    let (mut j, mut a, mut w, mut p, mut lt) = (j0, a0, w0, p0, lt0);
    loop {
        let step = lt.exp();
        p = (p - step).max(0.0);
        j += 1.0;
        w *= mu / j;
        let pdf_term = 0.5 * step;
        a += 1.0;
        lt += ln_x2 - a.ln();
        cdf += w * p;
        pdf += w * pdf_term;
        let ratio = mu / (j + 1.0);
        if ratio < 1.0 && w * ratio / (1.0 - ratio) < TAIL_MASS {
            break;
        }
        if w == 0.0 && j > mu {
            break;
        }
    }

    // Downward from the mode.
    let (mut j, mut a, mut w, mut p, mut lt) = (j0, a0, w0, p0, lt0);
    while j > 0.0 {
        w *= j / mu;
        j -= 1.0;
        lt += a.ln() - ln_x2;
        a -= 1.0;
        p = (p + lt.exp()).min(1.0);
        cdf += w * p;
        pdf += w * density_term(lt, a);
        let ratio = j / mu;
        if ratio < 1.0 && w * ratio / (1.0 - ratio) < TAIL_MASS {
            break;
        }
    }

    CdfPdf {
        cdf: cdf.clamp(0.0, 1.0),
        pdf: pdf.max(0.0),
    }
}

/// `P[χ²_df(λ) ≤ x]`. Returns 0 for `x ≤ 0`.
pub fn ncchisq_cdf(x: f64, params: ChiSqParams) -> f64 {
    cdf_pdf(x, params).cdf
}

/// Inverse of [`ncchisq_cdf`] in `x`.
///
/// Safeguarded Newton iteration: every evaluated point tightens a bracket
/// around the root and any Newton step leaving the bracket is replaced by
/// bisection (or by doubling while no upper end is known).
pub fn ncchisq_quantile(p: Probability, params: ChiSqParams) -> Result<f64> {
    let target = p.value();
    if target <= 0.0 || target >= 1.0 {
        return Err(Error::ProbabilityDomain(target));
    }
    let k = params.df as f64;
    let lambda = params.lambda;

    // Patnaik's scaled central approximation with Wilson-Hilferty, as a start.
    let z = normal_quantile(p)?;
    let scale = (k + 2.0 * lambda) / (k + lambda);
    let h = (k + lambda) * (k + lambda) / (k + 2.0 * lambda);
    let wh = 1.0 - 2.0 / (9.0 * h) + z * (2.0 / (9.0 * h)).sqrt();
    let mut x = scale * h * wh.max(0.05).powi(3);
    if !(x > 0.0) || !x.is_finite() {
        x = k + lambda;
    }

    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;
    const MAX_ITER: usize = 400;
    for _ in 0..MAX_ITER {
        let CdfPdf { cdf, pdf } = cdf_pdf(x, params);
        let resid = cdf - target;
        if resid == 0.0 {
            return Ok(x);
        }
        if resid < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = if pdf > 0.0 { x - resid / pdf } else { f64::NAN };
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else if hi.is_infinite() {
            2.0 * x.max(1.0)
        } else {
            0.5 * (lo + hi)
        };
        let tol = 1e-13 * next.abs().max(1e-300);
        let converged = (next - x).abs() <= tol || (hi - lo) <= tol;
        x = next;
        if converged {
            let final_resid = ncchisq_cdf(x, params) - target;
            if final_resid.abs() <= 1e-10 {
                return Ok(x);
            }
        }
    }
    Err(Error::NoConvergence {
        what: "non-central chi-squared quantile",
        iterations: MAX_ITER,
    })
}
