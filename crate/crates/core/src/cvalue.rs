//! The win, the c-value root finder, the two-stage estimator and the
//! contingency bookkeeping used to summarize simulations.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// A fixed pair of estimates computed from one observation vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonProblem {
    y: DVector<f64>,
    default_estimate: DVector<f64>,
    alternative_estimate: DVector<f64>,
}

impl ComparisonProblem {
    pub fn new(
        y: DVector<f64>,
        default_estimate: DVector<f64>,
        alternative_estimate: DVector<f64>,
    ) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::invalid("observation vector is empty"));
        }
        check_dim("default estimate", y.len(), default_estimate.len())?;
        check_dim("alternative estimate", y.len(), alternative_estimate.len())?;
        Ok(ComparisonProblem {
            y,
            default_estimate,
            alternative_estimate,
        })
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn default_estimate(&self) -> &DVector<f64> {
        &self.default_estimate
    }

    pub fn alternative_estimate(&self) -> &DVector<f64> {
        &self.alternative_estimate
    }

    pub fn dim(&self) -> usize {
        self.y.len()
    }

    /// The estimate reported by the two-stage rule at level `alpha`.
    pub fn two_stage_estimate(&self, c: f64, alpha: f64) -> &DVector<f64> {
        match two_stage_select(c, alpha) {
            Report::Default => &self.default_estimate,
            Report::Alternative => &self.alternative_estimate,
        }
    }
}

/// Squared-error loss `‖estimate − θ‖²`.
pub fn squared_loss(estimate: &DVector<f64>, theta: &DVector<f64>) -> f64 {
    (estimate - theta).norm_squared()
}

/// Loss of the default estimate minus loss of the alternative. Positive
/// values mean the alternative was closer to `theta`.
pub fn win(theta: &DVector<f64>, problem: &ComparisonProblem) -> Result<f64> {
    check_dim("theta", problem.dim(), theta.len())?;
    Ok(squared_loss(&problem.default_estimate, theta)
        - squared_loss(&problem.alternative_estimate, theta))
}

/// A lower bound `α ↦ b(y, α)` on the win for one fixed dataset.
///
/// Implementations must accept every `α` in `[0, 1)` and are expected to be
/// non-increasing in `α`.
pub trait LowerBound: Sync {
    fn evaluate(&self, alpha: f64) -> Result<f64>;
}

impl<F> LowerBound for F
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    fn evaluate(&self, alpha: f64) -> Result<f64> {
        self(alpha)
    }
}

/// Settings for [`c_value_with`].
#[derive(Debug, Clone, Copy)]
pub struct CValueOptions {
    /// Width of the final bisection bracket in `α`.
    pub tolerance: f64,
    /// Number of cells in the monotonicity pre-scan.
    pub grid_cells: usize,
}

impl Default for CValueOptions {
    fn default() -> Self {
        CValueOptions {
            tolerance: 1e-6,
            grid_cells: 64,
        }
    }
}

/// Largest level at which the bound is evaluated.
pub const TOP_ALPHA: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CValueResult {
    pub c_value: f64,
    /// `(α, b(y, α))` at the pre-scan grid points.
    pub bound_samples: Vec<(f64, f64)>,
    pub tolerance: f64,
    /// The bound stayed positive all the way up to [`TOP_ALPHA`].
    pub degenerate: bool,
    /// The pre-scan found the bound non-increasing.
    pub monotone: bool,
}

pub fn c_value(bound: &dyn LowerBound) -> Result<CValueResult> {
    c_value_with(bound, CValueOptions::default())
}

/// `inf {α ∈ [0, 1] : b(y, α) ≤ 0}`.
///
/// The bound is first tabulated on a uniform grid. If the table is
/// non-increasing the root is bisected inside the first cell where the sign
/// flips and the upper end of the final bracket is returned; otherwise the
/// smallest grid level with a non-positive bound is returned.
pub fn c_value_with(bound: &dyn LowerBound, options: CValueOptions) -> Result<CValueResult> {
    if !(options.tolerance > 0.0) || options.grid_cells < 2 {
        return Err(Error::invalid("c-value tolerance must be positive and the grid needs two cells"));
    }
    let cells = options.grid_cells;
    let mut samples = Vec::with_capacity(cells + 1);
    for i in 0..cells {
        let alpha = i as f64 / cells as f64;
        samples.push((alpha, checked(bound, alpha)?));
    }
    samples.push((TOP_ALPHA, checked(bound, TOP_ALPHA)?));

    let monotone = samples.windows(2).all(|w| w[1].1 <= w[0].1);
    let result = |c_value: f64, degenerate: bool, samples: Vec<(f64, f64)>| CValueResult {
        c_value,
        bound_samples: samples,
        tolerance: options.tolerance,
        degenerate,
        monotone,
    };

    if samples[0].1 <= 0.0 {
        return Ok(result(0.0, false, samples));
    }
    if samples[cells].1 > 0.0 {
        return Ok(result(1.0, true, samples));
    }
    let first_nonpositive = samples
        .iter()
        .position(|&(_, b)| b <= 0.0)
        .expect("the top sample is non-positive");

    if !monotone {
        log::warn!("bound is not monotone on the pre-scan grid; using the conservative grid c-value");
        let c = samples[first_nonpositive].0;
        return Ok(result(c, false, samples));
    }

    let mut lo = samples[first_nonpositive - 1].0;
    let mut hi = samples[first_nonpositive].0;
    while hi - lo > options.tolerance {
        let mid = 0.5 * (lo + hi);
        if checked(bound, mid)? <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(result(hi, false, samples))
}

fn checked(bound: &dyn LowerBound, alpha: f64) -> Result<f64> {
    let b = bound.evaluate(alpha)?;
    if b.is_nan() {
        return Err(Error::NonFinite("bound evaluation"));
    }
    Ok(b)
}

/// Which of the two estimates the two-stage rule reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Report {
    Default,
    Alternative,
}

/// Report the alternative iff `c > alpha`; a tie keeps the default.
pub fn two_stage_select(c: f64, alpha: f64) -> Report {
    if c > alpha {
        Report::Alternative
    } else {
        Report::Default
    }
}

/// Which estimate actually had the smaller loss. A zero win counts as the
/// default being better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerLoss {
    Default,
    Alternative,
}

impl LowerLoss {
    pub fn from_win(win: f64) -> Self {
        if win > 0.0 {
            LowerLoss::Alternative
        } else {
            LowerLoss::Default
        }
    }
}

/// Counts of (lower-loss estimate, reported estimate) outcomes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    /// Default lower loss, default reported.
    pub dll_dr: usize,
    /// Default lower loss, alternative reported.
    pub dll_ar: usize,
    /// Alternative lower loss, default reported.
    pub all_dr: usize,
    /// Alternative lower loss, alternative reported.
    pub all_ar: usize,
}

/// Percentages of a [`ContingencyTable`], summing to 100.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContingencyPercentages {
    pub dll_dr: f64,
    pub dll_ar: f64,
    pub all_dr: f64,
    pub all_ar: f64,
}

impl ContingencyTable {
    pub fn add(&mut self, win: f64, reported: Report) {
        match (LowerLoss::from_win(win), reported) {
            (LowerLoss::Default, Report::Default) => self.dll_dr += 1,
            (LowerLoss::Default, Report::Alternative) => self.dll_ar += 1,
            (LowerLoss::Alternative, Report::Default) => self.all_dr += 1,
            (LowerLoss::Alternative, Report::Alternative) => self.all_ar += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.dll_dr + self.dll_ar + self.all_dr + self.all_ar
    }

    pub fn percentages(&self) -> Result<ContingencyPercentages> {
        let n = self.total();
        if n == 0 {
            return Err(Error::invalid("contingency table has no records"));
        }
        let pct = |k: usize| 100.0 * k as f64 / n as f64;
        Ok(ContingencyPercentages {
            dll_dr: pct(self.dll_dr),
            dll_ar: pct(self.dll_ar),
            all_dr: pct(self.all_dr),
            all_ar: pct(self.all_ar),
        })
    }

    /// Share of records in which the reported estimate had the larger loss.
    pub fn wrong_fraction(&self) -> f64 {
        (self.dll_ar + self.all_dr) as f64 / self.total().max(1) as f64
    }

    /// Share of records in which the alternative was reported.
    pub fn alternative_fraction(&self) -> f64 {
        (self.dll_ar + self.all_ar) as f64 / self.total().max(1) as f64
    }
}

/// Tabulates `(win, reported)` records into percentages.
pub fn contingency_table(records: &[(f64, Report)]) -> Result<ContingencyPercentages> {
    let mut table = ContingencyTable::default();
    for &(w, r) in records {
        table.add(w, r);
    }
    table.percentages()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn win_arithmetic() {
        let p = ComparisonProblem::new(v(&[1.0, 0.0]), v(&[1.0, 0.0]), v(&[0.5, 0.0])).unwrap();
        assert!((win(&v(&[0.0, 0.0]), &p).unwrap() - 0.75).abs() < 1e-15);
        let same = ComparisonProblem::new(v(&[1.0, 2.0]), v(&[1.0, 2.0]), v(&[1.0, 2.0])).unwrap();
        assert_eq!(win(&v(&[3.0, -1.0]), &same).unwrap(), 0.0);
        let w = win(p.alternative_estimate(), &p).unwrap();
        assert!((w - 0.25).abs() < 1e-15);
    }

    #[test]
    fn win_dimension_mismatch() {
        let p = ComparisonProblem::new(v(&[1.0, 0.0]), v(&[1.0, 0.0]), v(&[0.5, 0.0])).unwrap();
        assert!(win(&v(&[0.0]), &p).is_err());
        assert!(ComparisonProblem::new(v(&[1.0]), v(&[1.0, 0.0]), v(&[0.5])).is_err());
    }

    #[test]
    fn c_value_of_zero_bound() {
        let r = c_value(&|_a: f64| Ok(0.0)).unwrap();
        assert_eq!(r.c_value, 0.0);
    }

    #[test]
    fn c_value_of_linear_bound() {
        let r = c_value(&|a: f64| Ok(0.5 - a)).unwrap();
        assert!((r.c_value - 0.5).abs() <= 1e-6);
        assert!(r.monotone && !r.degenerate);
        assert_eq!(r.bound_samples.len(), 65);
    }

    #[test]
    fn c_value_of_always_positive_bound() {
        let r = c_value(&|a: f64| Ok(2.0 - a)).unwrap();
        assert_eq!(r.c_value, 1.0);
        assert!(r.degenerate);
    }

    #[test]
    fn c_value_non_monotone_falls_back_to_grid() {
        // Dips below zero at 0.3 and rises again before falling for good.
        let r = c_value(&|a: f64| Ok(if (0.29..0.31).contains(&a) { -1.0 } else { 0.8 - a })).unwrap();
        assert!(!r.monotone);
        assert_eq!(r.c_value, 19.0 / 64.0);
    }

    #[test]
    fn c_value_propagates_errors() {
        let failing = |_a: f64| -> Result<f64> { Err(Error::invalid("boom")) };
        assert!(c_value(&failing).is_err());
        assert!(c_value(&|_a: f64| Ok(f64::NAN)).is_err());
    }

    #[test]
    fn two_stage_boundaries() {
        assert_eq!(two_stage_select(0.99, 0.95), Report::Alternative);
        assert_eq!(two_stage_select(0.95, 0.95), Report::Default);
        assert_eq!(two_stage_select(0.0, 0.0), Report::Default);
        let p = ComparisonProblem::new(v(&[1.0]), v(&[1.0]), v(&[0.0])).unwrap();
        assert_eq!(p.two_stage_estimate(0.99, 0.95)[0], 0.0);
        assert_eq!(p.two_stage_estimate(0.2, 0.95)[0], 1.0);
    }

    #[test]
    fn contingency_all_one_cell() {
        let pct = contingency_table(&[(1.0, Report::Alternative); 7]).unwrap();
        assert_eq!(pct.all_ar, 100.0);
        assert_eq!(pct.dll_dr + pct.dll_ar + pct.all_dr, 0.0);
    }

    #[test]
    fn contingency_balanced() {
        let recs = [
            (1.0, Report::Alternative),
            (1.0, Report::Default),
            (-1.0, Report::Alternative),
            (-1.0, Report::Default),
        ];
        let pct = contingency_table(&recs).unwrap();
        for x in [pct.dll_dr, pct.dll_ar, pct.all_dr, pct.all_ar] {
            assert_eq!(x, 25.0);
        }
    }

    #[test]
    fn contingency_ties_go_to_default_row() {
        let mut t = ContingencyTable::default();
        t.add(0.0, Report::Alternative);
        assert_eq!(t.dll_ar, 1);
        assert!(contingency_table(&[]).is_err());
    }
}
