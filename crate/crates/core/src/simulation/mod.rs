//! Seeded Monte Carlo experiments.
//!
//! Every experiment is a set of independent replicates indexed by
//! (grid point, replicate). Each replicate draws from its own generator (see
//! [`rng`]) and results are collected by index, so a report depends only on
//! the [`ExperimentConfig`] and not on the number of worker threads.
//!
//! | experiment  | default        | alternative                  | grid values                      |
//! |-------------|----------------|------------------------------|----------------------------------|
//! | calibration, selection, risk | MLE `y` | Lindley–Smith (shrink to the mean) | `‖P₁^⊥θ‖/√N`     |
//! | eb          | MLE `y`        | James–Stein (shrink to 0)    | `‖θ‖/√N`                         |
//! | pitfall     | MLE `y`        | Lindley–Smith                | `‖P₁^⊥θ‖/√N`                     |
//! | logistic    | logistic MLE   | logistic MAP                 | number of observations `M`       |
//! | gp          | nugget-kernel posterior mean | multi-scale posterior mean | 0 = multi-scale prior, 1 = nugget prior |

mod gp;
mod logistic;
mod normal;
pub mod report;
pub mod rng;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::{AffineBound, AffineComparison};
use crate::cvalue::{c_value, CValueResult, LowerBound};
use crate::error::{Error, Result};
use crate::estimators::{GpKernel, GpKernelKind, SqExpKernel, SureRule};

pub use report::{
    format_f64, ols_slope, read_convergence_csv, read_records_csv, read_sequential_csv, read_sure_csv, CellSummary,
    ConvergenceRecord, CONVERGENCE_COLUMNS, RECORD_COLUMNS, SEQUENTIAL_COLUMNS, SURE_COLUMNS,
    ConvergenceSummary, GridSummary, MeanEstimate, Proportion, Record, SequentialChoice, SequentialRecord,
    SequentialSummary, SimulationReport, Summary, SureRecord, SureSummary,
};
pub use rng::replicate_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Calibration,
    Selection,
    Risk,
    Pitfall,
    Logistic,
    Gp,
    Eb,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Calibration,
        Experiment::Selection,
        Experiment::Risk,
        Experiment::Pitfall,
        Experiment::Logistic,
        Experiment::Gp,
        Experiment::Eb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Calibration => "calibration",
            Experiment::Selection => "selection",
            Experiment::Risk => "risk",
            Experiment::Pitfall => "pitfall",
            Experiment::Logistic => "logistic",
            Experiment::Gp => "gp",
            Experiment::Eb => "eb",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
            Error::invalid(format!("unknown experiment '{s}'; valid names: {}", names.join(", ")))
        })
    }
}

/// Settings of the logistic approximation-rate study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticSettings {
    pub convergence_n: usize,
    pub convergence_m: Vec<usize>,
    pub convergence_replicates: usize,
}

impl Default for LogisticSettings {
    fn default() -> Self {
        LogisticSettings {
            convergence_n: 2,
            convergence_m: vec![50, 100, 200, 400, 800, 1600],
            convergence_replicates: 25,
        }
    }
}

/// Synthetic drifter layout and kernels for the GP comparison. The number of
/// drifters is [`ExperimentConfig::n`]; each is observed `times` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpSettings {
    pub times: usize,
    pub time_step: f64,
    /// Starting positions are uniform on `[0, region]²`.
    pub region: f64,
    pub velocity_sd: f64,
    pub kernel: GpKernel,
    pub noise_variance: f64,
    /// The third estimate in the sequential comparison uses the multi-scale
    /// kernel with submesoscale length scales multiplied by this factor.
    pub third_length_factor: f64,
}

impl Default for GpSettings {
    fn default() -> Self {
        GpSettings {
            times: 6,
            time_step: 3.0,
            region: 20.0,
            velocity_sd: 0.5,
            kernel: GpKernel {
                mesoscale: SqExpKernel {
                    variance: 1.0,
                    length_scales: [10.0, 10.0, 24.0],
                },
                submesoscale: SqExpKernel {
                    variance: 1.0,
                    length_scales: [3.0, 3.0, 9.0],
                },
                kind: GpKernelKind::MultiScale,
            },
            noise_variance: 0.05,
            third_length_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Dimension of `θ` (number of drifters for `gp`).
    pub n: usize,
    pub replicates: usize,
    /// Prior scale of the Lindley–Smith alternative.
    pub tau: f64,
    pub grid: Vec<f64>,
    pub alphas: Vec<f64>,
    pub seed: u64,
    #[serde(default)]
    pub sure_rule: SureRule,
    /// Apply the Berry–Esseen correction to the approximate affine bound
    /// (`logistic` and `gp`).
    #[serde(default)]
    pub berry_esseen: bool,
    #[serde(default)]
    pub logistic: LogisticSettings,
    #[serde(default)]
    pub gp: GpSettings,
}

const DEFAULT_SEED: u64 = 20_240_601;

fn fig_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 * 0.25).collect()
}

impl ExperimentConfig {
    /// The configuration each experiment runs with when nothing is
    /// overridden.
    pub fn preset(experiment: Experiment) -> Self {
        let levels = vec![0.5, 0.8, 0.9, 0.95];
        let base = ExperimentConfig {
            experiment,
            n: 50,
            replicates: 500,
            tau: 1.0,
            grid: fig_grid(),
            alphas: levels,
            seed: DEFAULT_SEED,
            sure_rule: SureRule::default(),
            berry_esseen: false,
            logistic: LogisticSettings::default(),
            gp: GpSettings::default(),
        };
        match experiment {
            Experiment::Calibration | Experiment::Selection | Experiment::Risk => base,
            Experiment::Eb => ExperimentConfig {
                grid: vec![0.0, 1.0, 2.0],
                ..base
            },
            Experiment::Pitfall => ExperimentConfig {
                n: 2,
                replicates: 5000,
                grid: vec![(2.999f64 / 2.0).sqrt()],
                alphas: Vec::new(),
                ..base
            },
            Experiment::Logistic => ExperimentConfig {
                n: 25,
                grid: vec![1000.0],
                alphas: vec![0.5, 0.8, 0.95],
                ..base
            },
            Experiment::Gp => ExperimentConfig {
                n: 25,
                replicates: 50,
                grid: vec![0.0, 1.0],
                alphas: vec![0.95],
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::invalid("replicate count must be at least 1"));
        }
        if self.grid.is_empty() {
            return Err(Error::invalid("the grid must not be empty"));
        }
        if self.grid.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::invalid("grid values must be finite and non-negative"));
        }
        if self.alphas.is_empty() && self.experiment != Experiment::Pitfall {
            return Err(Error::invalid("the alpha grid must not be empty"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::ProbabilityDomain(*a));
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(Error::invalid(format!("tau must be finite and non-negative, got {}", self.tau)));
        }
        match self.experiment {
            Experiment::Calibration | Experiment::Selection | Experiment::Risk | Experiment::Pitfall => {
                if self.n < 2 {
                    return Err(Error::invalid("shrinkage toward the mean needs n ≥ 2"));
                }
                if self.experiment == Experiment::Selection && !(self.tau > 0.0) {
                    return Err(Error::invalid("the SURE comparator needs tau > 0"));
                }
            }
            Experiment::Eb => {
                if self.n < 3 {
                    return Err(Error::invalid("James–Stein needs n ≥ 3"));
                }
            }
            Experiment::Logistic => {
                if self.n == 0 {
                    return Err(Error::invalid("logistic dimension must be positive"));
                }
                for &m in &self.grid {
                    if m.fract() != 0.0 || (m as usize) < self.n {
                        return Err(Error::invalid(format!(
                            "logistic grid values are observation counts ≥ n, got {m}"
                        )));
                    }
                }
                let s = &self.logistic;
                if s.convergence_replicates > 0 && (s.convergence_n == 0 || s.convergence_m.len() < 2) {
                    return Err(Error::invalid("the convergence study needs n ≥ 1 and at least two values of M"));
                }
                if let Some(m) = s.convergence_m.iter().find(|m| **m < s.convergence_n) {
                    return Err(Error::invalid(format!("convergence M = {m} is below the dimension")));
                }
            }
            Experiment::Gp => {
                if self.n == 0 {
                    return Err(Error::invalid("the GP experiment needs at least one drifter"));
                }
                if let Some(g) = self.grid.iter().find(|g| **g != 0.0 && **g != 1.0) {
                    return Err(Error::invalid(format!(
                        "GP grid values select the data-generating prior and must be 0 or 1, got {g}"
                    )));
                }
                let s = &self.gp;
                s.kernel.validate()?;
                let positive = [s.time_step, s.region, s.noise_variance, s.third_length_factor];
                if s.times == 0 || positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return Err(Error::invalid("GP settings must be positive"));
                }
                if !(s.velocity_sd >= 0.0) {
                    return Err(Error::invalid("GP velocity_sd must be non-negative"));
                }
            }
        }
        Ok(())
    }

    /// Number of rows in the main record file.
    pub fn record_count(&self) -> usize {
        self.grid.len() * self.replicates * self.alphas.len().max(1)
    }
}

/// Runs `f` over `0..count` on the current rayon pool, keeping index order.
pub(crate) fn par_map<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

/// c-value, bounds at each α and warnings for an affine comparison.
pub(crate) struct AffineOutcome {
    pub c: CValueResult,
    pub bounds: Vec<f64>,
    pub warnings: Vec<String>,
}

pub(crate) fn affine_outcome(
    cmp: &AffineComparison,
    berry_esseen: bool,
    alphas: &[f64],
) -> Result<AffineOutcome> {
    let bound = if berry_esseen {
        AffineBound::with_berry_esseen(cmp)?
    } else {
        AffineBound::new(cmp)?
    };
    let bounds = alphas.iter().map(|&a| bound.evaluate(a)).collect::<Result<Vec<_>>>()?;
    Ok(AffineOutcome {
        c: c_value(&bound)?,
        bounds,
        warnings: bound.functionals.warnings.clone(),
    })
}

fn sorted_unique(warnings: impl IntoIterator<Item = String>) -> Vec<String> {
    let set: std::collections::BTreeSet<String> = warnings.into_iter().collect();
    set.into_iter().collect()
}

/// Runs the experiment named in the config. With `workers` set, a dedicated
/// pool of that many threads is used; otherwise rayon's global pool.
pub fn run_experiment(config: &ExperimentConfig, workers: Option<usize>) -> Result<SimulationReport> {
    let run = || match config.experiment {
        Experiment::Calibration => run_calibration(config),
        Experiment::Selection => run_selection_study(config),
        Experiment::Risk => run_risk_profile(config),
        Experiment::Pitfall => run_risk_pitfall(config),
        Experiment::Logistic => run_logistic_experiments(config),
        Experiment::Gp => run_gp_model_comparison(config),
        Experiment::Eb => run_eb_calibration(config),
    };
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::invalid(format!("cannot start {w} worker threads: {e}")))?;
            pool.install(run)
        }
        None => run(),
    }
}

/// Coverage of the Lindley–Smith bound over the grid.
pub fn run_calibration(config: &ExperimentConfig) -> Result<SimulationReport> {
    normal::run(config, normal::Shrinkage::LindleySmith, false)
}

/// As [`run_calibration`], plus the SURE comparator on every replicate.
pub fn run_selection_study(config: &ExperimentConfig) -> Result<SimulationReport> {
    normal::run(config, normal::Shrinkage::LindleySmith, true)
}

/// Same records as [`run_calibration`]; the risk table is
/// [`Summary::grid`] together with [`CellSummary::risk_two_stage`].
pub fn run_risk_profile(config: &ExperimentConfig) -> Result<SimulationReport> {
    normal::run(config, normal::Shrinkage::LindleySmith, false)
}

/// James–Stein against the MLE.
pub fn run_eb_calibration(config: &ExperimentConfig) -> Result<SimulationReport> {
    normal::run(config, normal::Shrinkage::JamesStein, false)
}

/// Loss comparison without bounds when `config.alphas` is empty.
pub fn run_risk_pitfall(config: &ExperimentConfig) -> Result<SimulationReport> {
    normal::run(config, normal::Shrinkage::LindleySmith, false)
}

/// The two-point risk pitfall with its preset design and the given seed.
pub fn run_risk_pitfall_demo(seed: u64) -> Result<SimulationReport> {
    let config = ExperimentConfig {
        seed,
        ..ExperimentConfig::preset(Experiment::Pitfall)
    };
    run_risk_pitfall(&config)
}

pub fn run_logistic_experiments(config: &ExperimentConfig) -> Result<SimulationReport> {
    logistic::run(config)
}

pub fn run_gp_model_comparison(config: &ExperimentConfig) -> Result<SimulationReport> {
    gp::run(config)
}
