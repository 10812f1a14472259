//! `cvalue simulate <name>`: run a named experiment and write its report
//! directory.
//!
//! The preset for `<name>` is the starting point. A `--config` file may
//! override any subset of its keys (nested tables are merged key by key) and
//! command-line flags override both.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cvalue_core::simulation::{run_experiment, Experiment, ExperimentConfig, SimulationReport};
use serde_json::Value;

use crate::error::{CliError, Result};

/// Command-line overrides; `None` leaves the preset or config value alone.
#[derive(Debug, Clone, Default)]
pub struct SimulateOverrides {
    pub config: Option<PathBuf>,
    pub n: Option<usize>,
    pub tau: Option<f64>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub grid: Option<Vec<f64>>,
    pub alphas: Option<Vec<f64>>,
    pub berry_esseen: bool,
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

pub fn resolve_config(name: &str, o: &SimulateOverrides) -> Result<ExperimentConfig> {
    let experiment: Experiment = name.parse()?;
    let mut config = ExperimentConfig::preset(experiment);
    if let Some(path) = &o.config {
        let patch: Value = crate::io::read_json(path)?;
        if let Some(e) = patch.get("experiment") {
            if e.as_str() != Some(experiment.name()) {
                return Err(CliError::in_file(
                    path,
                    format!("experiment {e} does not match the command-line name {name}"),
                ));
            }
        }
        let mut value = serde_json::to_value(&config).expect("configs serialize");
        merge(&mut value, patch);
        config = serde_json::from_value(value).map_err(|e| CliError::in_file(path, e))?;
    }
    if let Some(n) = o.n {
        config.n = n;
    }
    if let Some(tau) = o.tau {
        config.tau = tau;
    }
    if let Some(reps) = o.reps {
        config.replicates = reps;
    }
    if let Some(seed) = o.seed {
        config.seed = seed;
    }
    if let Some(grid) = &o.grid {
        config.grid = grid.clone();
    }
    if let Some(alphas) = &o.alphas {
        config.alphas = alphas.clone();
    }
    if o.berry_esseen {
        config.berry_esseen = true;
    }
    config.validate()?;
    Ok(config)
}

/// Runs the experiment and writes the report into `out`.
pub fn run_simulate(config: &ExperimentConfig, workers: Option<usize>, out: &Path) -> Result<SimulationReport> {
    if workers == Some(0) {
        return Err(CliError::input("--workers must be at least 1"));
    }
    let report = run_experiment(config, workers)?;
    report.write_to_dir(out)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    Ok(report)
}

fn pct(p: f64) -> String {
    format!("{:5.1}%", 100.0 * p)
}

/// Plain-text digest of the summary printed after a run.
pub fn headline(report: &SimulationReport) -> String {
    let s = &report.summary;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{}: {} records, seed {}, {} dropped replicates",
        s.experiment,
        s.record_count,
        report.config.seed,
        s.dropped_replicates
    );
    if !s.cells.is_empty() {
        let _ = writeln!(out, "{:>10} {:>6} {:>9} {:>9} {:>9} {:>11}", "grid", "alpha", "coverage", "selected", "worse", "risk(2-st)");
        for c in &s.cells {
            let _ = writeln!(
                out,
                "{:>10.4} {:>6.3} {:>9} {:>9} {:>9} {:>11.4}",
                c.grid_value,
                c.alpha,
                pct(c.coverage.estimate),
                pct(c.selection.estimate),
                pct(c.worse_than_default.estimate),
                c.risk_two_stage.mean
            );
        }
    }
    if !s.grid.is_empty() {
        let _ = writeln!(out, "{:>10} {:>11} {:>11} {:>12} {:>9}", "grid", "risk(def)", "risk(alt)", "P[def wins]", "median c");
        for g in &s.grid {
            let median = g.median_c_value.map(|m| format!("{m:.4}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:>10.4} {:>11.4} {:>11.4} {:>12} {:>9}",
                g.grid_value,
                g.risk_default.mean,
                g.risk_alt.mean,
                pct(g.default_smaller_loss.estimate),
                median
            );
        }
    }
    for u in &s.sure {
        let _ = writeln!(
            out,
            "SURE at grid {:.4}: wrong {}, alternative reported {}",
            u.grid_value,
            pct(u.wrong.estimate),
            pct(u.alternative.estimate)
        );
    }
    if let Some(c) = &s.convergence {
        let _ = writeln!(
            out,
            "log-log slopes: approx-MAP {:.3}, MLE-truth {:.3}, MAP-truth {:.3} ({} rows, {} dropped)",
            c.slope_approx_map, c.slope_mle_truth, c.slope_map_truth, c.rows, c.dropped
        );
    }
    for q in &s.sequential {
        let _ = writeln!(
            out,
            "sequential at grid {:.0}, alpha {:.3}: mis-selection {}, third reported {}",
            q.grid_value,
            q.alpha,
            pct(q.mis_selection.estimate),
            pct(q.third_reported.estimate)
        );
    }
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}
