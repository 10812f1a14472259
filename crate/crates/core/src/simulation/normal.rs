//! Normal-means replicates: `y ~ N(θ, I)` with `θ = r √N v` for a fixed unit
//! vector `v ⊥ 1`.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use super::report::{Record, SimulationReport, Summary, SureRecord};
use super::rng::{replicate_rng, STREAM_DATA};
use super::{par_map, sorted_unique, ExperimentConfig};
use crate::cvalue::{c_value, squared_loss, CValueResult, Report};
use crate::error::Result;
use crate::estimators::{james_stein, james_stein_bound_spec, sure_selector, SureSelection};
use crate::normal_means::{subspace_bound, SubspaceShrinkageSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Shrinkage {
    LindleySmith,
    JamesStein,
}

/// Centered linear trend scaled to unit length.
pub(crate) fn trend_direction(n: usize) -> DVector<f64> {
    let mid = (n as f64 - 1.0) / 2.0;
    let v = DVector::from_fn(n, |i, _| i as f64 - mid);
    let norm = v.norm();
    if norm > 0.0 {
        v / norm
    } else {
        v
    }
}

pub(crate) fn standard_normal_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

struct Outcome {
    win: f64,
    loss_default: f64,
    loss_alt: f64,
    c: Option<CValueResult>,
    bounds: Vec<f64>,
    sure: Option<SureSelection>,
}

fn replicate(
    config: &ExperimentConfig,
    shrinkage: Shrinkage,
    theta: &DVector<f64>,
    grid: usize,
    rep: usize,
    with_sure: bool,
) -> Result<Outcome> {
    let mut rng = replicate_rng(config.seed, STREAM_DATA, grid, rep);
    let y = theta + standard_normal_vector(&mut rng, theta.len());
    let (spec, alt) = match shrinkage {
        Shrinkage::LindleySmith => {
            let spec = SubspaceShrinkageSpec::lindley_smith(y.clone(), config.tau)?;
            let alt = spec.alternative_estimate();
            (spec, alt)
        }
        Shrinkage::JamesStein => (james_stein_bound_spec(&y)?, james_stein(&y)?.estimate),
    };
    let loss_default = squared_loss(&y, theta);
    let loss_alt = squared_loss(&alt, theta);
    let (c, bounds) = if config.alphas.is_empty() {
        (None, Vec::new())
    } else {
        let bounds = config
            .alphas
            .iter()
            .map(|&a| subspace_bound(&spec, a))
            .collect::<Result<Vec<_>>>()?;
        (Some(c_value(&spec)?), bounds)
    };
    let sure = if with_sure {
        Some(sure_selector(&y, config.tau, config.sure_rule)?)
    } else {
        None
    };
    Ok(Outcome {
        win: loss_default - loss_alt,
        loss_default,
        loss_alt,
        c,
        bounds,
        sure,
    })
}

pub(crate) fn run(config: &ExperimentConfig, shrinkage: Shrinkage, with_sure: bool) -> Result<SimulationReport> {
    config.validate()?;
    let n = config.n;
    let reps = config.replicates;
    let v = trend_direction(n);
    let outcomes = par_map(config.grid.len() * reps, |job| {
        let (g, i) = (job / reps, job % reps);
        let theta = &v * (config.grid[g] * (n as f64).sqrt());
        replicate(config, shrinkage, &theta, g, i, with_sure)
    })?;

    let mut records = Vec::with_capacity(config.record_count());
    let mut sure_records = Vec::new();
    let mut non_monotone = 0;
    let mut degenerate = 0;
    for (job, out) in outcomes.iter().enumerate() {
        let (g, i) = (job / reps, job % reps);
        let grid_value = config.grid[g];
        let base = Record {
            grid_value,
            alpha: None,
            replicate: i,
            win: Some(out.win),
            bound: None,
            c_value: None,
            selected: None,
            loss_default: Some(out.loss_default),
            loss_alt: Some(out.loss_alt),
        };
        match &out.c {
            None => records.push(base),
            Some(c) => {
                non_monotone += !c.monotone as usize;
                degenerate += c.degenerate as usize;
                for (&alpha, &b) in config.alphas.iter().zip(&out.bounds) {
                    records.push(Record {
                        alpha: Some(alpha),
                        bound: Some(b),
                        c_value: Some(c.c_value),
                        selected: Some(c.c_value > alpha),
                        ..base.clone()
                    });
                }
            }
        }
        if let Some(s) = out.sure {
            sure_records.push(SureRecord {
                grid_value,
                replicate: i,
                sure: s.sure,
                selected: s.selected == Report::Alternative,
                win: out.win,
            });
        }
    }
    let mut warnings = Vec::new();
    if non_monotone > 0 {
        warnings.push(format!(
            "bound not monotone on the pre-scan grid in {non_monotone} replicates; grid c-values used"
        ));
    }
    if degenerate > 0 {
        warnings.push(format!("bound positive up to the top level in {degenerate} replicates (c = 1)"));
    }
    let summary = Summary::from_records(config.experiment, &records, &sure_records, &[], &[]);
    Ok(SimulationReport {
        config: config.clone(),
        records,
        sure_records,
        convergence_records: Vec::new(),
        sequential_records: Vec::new(),
        summary,
        warnings: sorted_unique(warnings),
    })
}
