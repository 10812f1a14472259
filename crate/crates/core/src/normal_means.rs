//! Exact chi-squared win bounds for shrinkage toward a linear subspace
//! against the MLE in the normal-means model `y ~ N(θ, σ² I)`.
//!
//! Everything is computed in unit-noise coordinates: with `s = ‖P_X^⊥ y‖²/σ²`
//! and `t = τ/σ`,
//!
//! ```text
//! b(y, α) = σ² · { inf_{λ ∈ [0, U]} [ 2/(1+t²) F⁻¹_{N−D}(q; λ/4) − λ/(2(1+t²)) ] − s/(1+t²)² }
//! ```
//!
//! where `q = (1−α)/2` and `U` is the smallest noncentrality whose
//! `q`-quantile reaches `s`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cvalue::LowerBound;
use crate::error::{check_dim, Error, Result};
use crate::linalg::column_projector;
use crate::special_fn::{ncchisq_cdf, ncchisq_quantile, ChiSqParams, Probability, MAX_NONCENTRALITY};

/// Number of interior cells in the λ sweep used to check that the infimum
/// sits at `λ = U`.
const SWEEP_CELLS: usize = 8;

/// Shrinkage of `y` toward the column space of `X`, compared with the MLE.
#[derive(Debug, Clone)]
pub struct SubspaceShrinkageSpec {
    y: DVector<f64>,
    projector: DMatrix<f64>,
    dim_subspace: usize,
    tau: f64,
    sigma: f64,
    residual_sq: f64,
}

impl SubspaceShrinkageSpec {
    /// `x` is `N × D`; `D = 0` shrinks toward the origin. `tau` is the prior
    /// scale and `sigma` the noise scale, both in the units of `y`.
    pub fn new(y: DVector<f64>, x: &DMatrix<f64>, tau: f64, sigma: f64) -> Result<Self> {
        check_dim("design rows", y.len(), x.nrows())?;
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::invalid(format!("tau must be finite and non-negative, got {tau}")));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("sigma must be finite and positive, got {sigma}")));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observation vector"));
        }
        let n = y.len();
        let d = x.ncols();
        if n <= d {
            return Err(Error::invalid(format!("need N > D, got N = {n}, D = {d}")));
        }
        let projector = column_projector(x)?;
        let residual_sq = (&y - &projector * &y).norm_squared();
        Ok(SubspaceShrinkageSpec {
            y,
            projector,
            dim_subspace: d,
            tau,
            sigma,
            residual_sq,
        })
    }

    /// Shrinkage toward the grand mean with unit noise.
    pub fn lindley_smith(y: DVector<f64>, tau: f64) -> Result<Self> {
        let n = y.len();
        Self::new(y, &DMatrix::from_element(n, 1, 1.0), tau, 1.0)
    }

    /// Shrinkage toward the origin with unit noise.
    pub fn origin(y: DVector<f64>, tau: f64) -> Result<Self> {
        let n = y.len();
        Self::new(y, &DMatrix::zeros(n, 0), tau, 1.0)
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim_subspace(&self) -> usize {
        self.dim_subspace
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Degrees of freedom `N − D` of the residual.
    pub fn df(&self) -> u32 {
        (self.n() - self.dim_subspace) as u32
    }

    /// `‖P_X^⊥ y‖²` in the units of `y`.
    pub fn residual_sq(&self) -> f64 {
        self.residual_sq
    }

    fn unit_tau(&self) -> f64 {
        self.tau / self.sigma
    }

    /// Posterior mean under `θ ~ N(Xβ, τ² I)` with a flat prior on `β`:
    /// `P_X y + t²/(1+t²) P_X^⊥ y`.
    pub fn alternative_estimate(&self) -> DVector<f64> {
        let t2 = self.unit_tau().powi(2);
        let fitted = &self.projector * &self.y;
        let resid = &self.y - &fitted;
        fitted + resid * (t2 / (1.0 + t2))
    }

    /// The alternative as an affine map of `y` (here linear).
    pub fn alternative_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let shrink = 1.0 / (1.0 + self.unit_tau().powi(2));
        DMatrix::identity(n, n) - (DMatrix::identity(n, n) - &self.projector) * shrink
    }
}

/// A high-confidence upper bound on the noncentrality `‖P_X^⊥ θ‖²/σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoncentralityInterval {
    pub upper: f64,
    pub level: Probability,
}

/// `inf {δ ≥ 0 : s ≤ F⁻¹_df(level; δ)}`, found through the equivalent
/// condition `F_df(s; δ) ≤ level` (the CDF is decreasing in δ).
fn unit_noncentrality(s: f64, df: u32, level: f64) -> Result<f64> {
    let g = |delta: f64| -> Result<f64> { Ok(ncchisq_cdf(s, ChiSqParams::new(df, delta)?) - level) };
    let g0 = g(0.0)?;
    if g0 <= 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut g_lo = g0;
    let mut hi = s.max(1.0);
    let mut g_hi = loop {
        if hi > MAX_NONCENTRALITY {
            return Err(Error::OutOfRange(format!(
                "noncentrality bound exceeds {MAX_NONCENTRALITY} (residual sum of squares {s})"
            )));
        }
        let v = g(hi)?;
        if v <= 0.0 {
            break v;
        }
        lo = hi;
        g_lo = v;
        hi = (2.0 * hi).min(MAX_NONCENTRALITY * (1.0 + 1e-12));
    };
    // Illinois regula falsi; the upper end always satisfies the condition.
    let mut side = 0i8;
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi.max(1e-300) {
            break;
        }
        let mut x = hi - g_hi * (hi - lo) / (g_hi - g_lo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let gx = g(x)?;
        if gx <= 0.0 {
            hi = x;
            g_hi = gx;
            if side == 1 {
                g_lo *= 0.5;
            }
            side = 1;
        } else {
            lo = x;
            g_lo = gx;
            if side == -1 {
                g_hi *= 0.5;
            }
            side = -1;
        }
    }
    Ok(hi)
}

pub fn noncentrality_upper_bound(
    spec: &SubspaceShrinkageSpec,
    level: Probability,
) -> Result<NoncentralityInterval> {
    let p = level.value();
    if p <= 0.0 || p >= 1.0 {
        return Err(Error::ProbabilityDomain(p));
    }
    let s = spec.residual_sq / spec.sigma.powi(2);
    let upper = unit_noncentrality(s, spec.df(), p)?;
    Ok(NoncentralityInterval { upper, level })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::ProbabilityDomain(alpha))
    }
}

/// The bound in unit-noise coordinates for residual sum of squares `s`.
pub(crate) fn unit_bound(s: f64, df: u32, t: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let q = 0.5 * (1.0 - alpha);
    let level = Probability::open(q)?;
    let upper = unit_noncentrality(s, df, q)?;
    let one_t2 = 1.0 + t * t;
    let h = |lambda: f64| -> Result<f64> {
        let quantile = ncchisq_quantile(level, ChiSqParams::new(df, 0.25 * lambda)?)?;
        Ok(2.0 / one_t2 * quantile - lambda / (2.0 * one_t2))
    };
    let inner = if upper == 0.0 {
        h(0.0)?
    } else {
        lambda_infimum(&h, upper)?
    };
    Ok(inner - s / (one_t2 * one_t2))
}

/// Minimum of `h` over `[0, upper]`. The endpoint `upper` is expected to be
/// the minimizer; a uniform sweep checks this and golden-section search
/// refines any interior minimum it finds.
fn lambda_infimum(h: &dyn Fn(f64) -> Result<f64>, upper: f64) -> Result<f64> {
    let step = upper / SWEEP_CELLS as f64;
    let mut values = Vec::with_capacity(SWEEP_CELLS + 1);
    for i in 0..=SWEEP_CELLS {
        let lambda = if i == SWEEP_CELLS { upper } else { step * i as f64 };
        values.push(h(lambda)?);
    }
    let endpoint = values[SWEEP_CELLS];
    let (best, &best_val) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("sweep is non-empty");
    if best == SWEEP_CELLS || best_val >= endpoint {
        return Ok(endpoint);
    }
    let lo = step * best.saturating_sub(1) as f64;
    let hi = (step * (best + 1) as f64).min(upper);
    let refined = golden_min(h, lo, hi, 1e-8 * upper)?;
    let inf = refined.min(best_val);
    log::debug!(
        "lambda infimum is interior: endpoint {endpoint}, interior {inf} (upper = {upper})"
    );
    Ok(inf.min(endpoint))
}

/// Golden-section minimization; returns the smallest value seen.
pub(crate) fn golden_min(f: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut best = fc.min(fd);
    let mut iterations = 0;
    while (b - a) > tol && iterations < 200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d)?;
        }
        best = best.min(fc).min(fd);
        iterations += 1;
    }
    Ok(best)
}

/// The exact lower bound `b(y, α)` on the win of the subspace-shrinkage
/// estimate over the MLE, valid for `0 ≤ α < 1`.
pub fn subspace_bound(spec: &SubspaceShrinkageSpec, alpha: f64) -> Result<f64> {
    let sigma2 = spec.sigma.powi(2);
    Ok(sigma2 * unit_bound(spec.residual_sq / sigma2, spec.df(), spec.unit_tau(), alpha)?)
}

impl LowerBound for SubspaceShrinkageSpec {
    fn evaluate(&self, alpha: f64) -> Result<f64> {
        subspace_bound(self, alpha)
    }
}

/// A confidence interval `[lo, hi]` for the noise standard deviation,
/// holding with probability `level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: Probability,
}

/// Default share of the miscoverage budget `1 − α` spent on the interval.
pub const DEFAULT_SIGMA_SHARE: f64 = 1.0 / 3.0;

impl SigmaInterval {
    pub fn new(lo: f64, hi: f64, level: Probability) -> Result<Self> {
        if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
            return Err(Error::invalid(format!("degenerate sigma interval [{lo}, {hi}]")));
        }
        Ok(SigmaInterval { lo, hi, level })
    }

    /// Interval whose level spends `share · (1 − α)` of the budget.
    pub fn with_share(lo: f64, hi: f64, alpha: f64, share: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&share) {
            return Err(Error::invalid(format!("budget share {share} outside [0, 1]")));
        }
        Self::new(lo, hi, Probability::new(1.0 - share * (1.0 - alpha))?)
    }
}

/// Grid resolution of the σ search before golden-section refinement.
const SIGMA_GRID: usize = 24;

/// Lower bound on the win when the noise scale is only known to lie in an
/// interval.
///
/// The alternative estimate stays fixed (it uses the spec's nominal σ). For a
/// candidate noise scale `s` the unit bound is rescaled by `s²`, and the
/// infimum over `s ∈ [lo, hi]` is taken at the level left over after the
/// interval's own miscoverage.
pub fn unknown_variance_bound(spec: &SubspaceShrinkageSpec, interval: SigmaInterval, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let spent = 1.0 - interval.level.value();
    let reduced = alpha + spent;
    if reduced >= 1.0 {
        return Err(Error::invalid(format!(
            "sigma interval level {} leaves no confidence for the bound at alpha {alpha}",
            interval.level.value()
        )));
    }
    let t = spec.unit_tau();
    let df = spec.df();
    let rss = spec.residual_sq;
    let at = |sigma: f64| -> Result<f64> {
        let s2 = sigma * sigma;
        Ok(s2 * unit_bound(rss / s2, df, t, reduced)?)
    };
    if interval.hi == interval.lo {
        return at(interval.lo);
    }
    let (ln_lo, ln_hi) = (interval.lo.ln(), interval.hi.ln());
    let grid: Vec<f64> = (0..=SIGMA_GRID)
        .map(|i| (ln_lo + (ln_hi - ln_lo) * i as f64 / SIGMA_GRID as f64).exp())
        .collect();
    let values = grid.iter().map(|&s| at(s)).collect::<Result<Vec<_>>>()?;
    let (best, &best_val) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is non-empty");
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(SIGMA_GRID)];
    let refined = golden_min(&at, a, b, 1e-10 * b)?;
    Ok(best_val.min(refined))
}
