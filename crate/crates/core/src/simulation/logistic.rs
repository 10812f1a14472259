//! Logistic regression with `θ ~ N(0, ½ I)` and covariates
//! `x_m ~ N(0, N⁻² I)`.
//!
//! The coverage study compares the MLE (default) with the exact MAP
//! (alternative) using the Laplace affine bound. The approximation-rate
//! study records how fast the Laplace estimate `(I + Σ̃)⁻¹θ̂` approaches the
//! MAP as `M` grows.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::report::{ConvergenceRecord, Record, SimulationReport, Summary};
use super::rng::{replicate_rng, STREAM_CONVERGENCE, STREAM_DATA};
use super::{affine_outcome, par_map, sorted_unique, AffineOutcome, ExperimentConfig};
use crate::affine::AffineComparison;
use crate::cvalue::squared_loss;
use crate::error::{Error, Result};
use crate::estimators::{laplace_at, logistic_map, logistic_mle, LogisticData};

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn draw_problem<R: Rng>(rng: &mut R, n: usize, m: usize) -> Result<(DVector<f64>, LogisticData)> {
    let theta = DVector::from_fn(n, |_, _| std::f64::consts::FRAC_1_SQRT_2 * rng.sample::<f64, _>(StandardNormal));
    let scale = 1.0 / n as f64;
    let x = DMatrix::from_fn(m, n, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
    let p = &x * &theta;
    let y = DVector::from_fn(m, |i, _| if rng.random::<f64>() < sigmoid(p[i]) { 1.0 } else { -1.0 });
    Ok((theta, LogisticData::new(x, y)?))
}

/// `Ok(None)` when the data are separable.
fn mle_or_separated(data: &LogisticData) -> Result<Option<DVector<f64>>> {
    match logistic_mle(data) {
        Ok(t) => Ok(Some(t)),
        Err(Error::Separation { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

struct Coverage {
    win: f64,
    loss_default: f64,
    loss_alt: f64,
    outcome: AffineOutcome,
}

fn coverage_replicate(config: &ExperimentConfig, g: usize, i: usize) -> Result<Option<Coverage>> {
    let mut rng = replicate_rng(config.seed, STREAM_DATA, g, i);
    let (theta, data) = draw_problem(&mut rng, config.n, config.grid[g] as usize)?;
    let Some(mle) = mle_or_separated(&data)? else {
        return Ok(None);
    };
    let map = logistic_map(&data)?;
    let lap = laplace_at(&data, mle)?;
    let cmp = AffineComparison::new(lap.sigma_tilde.clone(), lap.default_form(), lap.alternative_form(), lap.mle.clone())?;
    let outcome = affine_outcome(&cmp, config.berry_esseen, &config.alphas)?;
    let loss_default = squared_loss(&lap.mle, &theta);
    let loss_alt = squared_loss(&map, &theta);
    Ok(Some(Coverage {
        win: loss_default - loss_alt,
        loss_default,
        loss_alt,
        outcome,
    }))
}

fn convergence_replicate(config: &ExperimentConfig, k: usize, i: usize) -> Result<ConvergenceRecord> {
    let s = &config.logistic;
    let m = s.convergence_m[k];
    let mut rng = replicate_rng(config.seed, STREAM_CONVERGENCE, k, i);
    let (theta, data) = draw_problem(&mut rng, s.convergence_n, m)?;
    let mut record = ConvergenceRecord {
        m,
        replicate: i,
        dist_approx_map: None,
        dist_mle_truth: None,
        dist_map_truth: None,
    };
    if let Some(mle) = mle_or_separated(&data)? {
        let map = logistic_map(&data)?;
        let lap = laplace_at(&data, mle)?;
        record.dist_approx_map = Some((&lap.estimate - &map).norm());
        record.dist_mle_truth = Some((&lap.mle - &theta).norm());
        record.dist_map_truth = Some((&map - &theta).norm());
    }
    Ok(record)
}

pub(crate) fn run(config: &ExperimentConfig) -> Result<SimulationReport> {
    config.validate()?;
    let reps = config.replicates;
    let outcomes = par_map(config.grid.len() * reps, |job| coverage_replicate(config, job / reps, job % reps))?;

    let mut records = Vec::with_capacity(config.record_count());
    let mut warnings = Vec::new();
    let mut separated = 0;
    for (job, out) in outcomes.iter().enumerate() {
        let (g, i) = (job / reps, job % reps);
        let empty = Record {
            grid_value: config.grid[g],
            alpha: None,
            replicate: i,
            win: None,
            bound: None,
            c_value: None,
            selected: None,
            loss_default: None,
            loss_alt: None,
        };
        for (k, &alpha) in config.alphas.iter().enumerate() {
            records.push(match out {
                None => Record {
                    alpha: Some(alpha),
                    ..empty.clone()
                },
                Some(cov) => Record {
                    alpha: Some(alpha),
                    win: Some(cov.win),
                    bound: Some(cov.outcome.bounds[k]),
                    c_value: Some(cov.outcome.c.c_value),
                    selected: Some(cov.outcome.c.c_value > alpha),
                    loss_default: Some(cov.loss_default),
                    loss_alt: Some(cov.loss_alt),
                    ..empty.clone()
                },
            });
        }
        match out {
            None => separated += 1,
            Some(cov) => warnings.extend(cov.outcome.warnings.iter().cloned()),
        }
    }

    let s = &config.logistic;
    let creps = s.convergence_replicates;
    let convergence = par_map(s.convergence_m.len() * creps, |job| {
        convergence_replicate(config, job / creps, job % creps)
    })?;
    let conv_dropped = convergence.iter().filter(|r| r.dist_approx_map.is_none()).count();
    if separated > 0 {
        warnings.push(format!("{separated} coverage replicates were separable and dropped"));
    }
    if conv_dropped > 0 {
        warnings.push(format!("{conv_dropped} approximation-rate replicates were separable and dropped"));
    }

    let summary = Summary::from_records(config.experiment, &records, &[], &convergence, &[]);
    Ok(SimulationReport {
        config: config.clone(),
        records,
        sure_records: Vec::new(),
        convergence_records: convergence,
        sequential_records: Vec::new(),
        summary,
        warnings: sorted_unique(warnings),
    })
}

#[cfg(test)]
mod tests {
    use super::super::{Experiment, LogisticSettings};
    use super::*;

    #[test]
    fn covariate_scale() {
        let mut rng = replicate_rng(3, STREAM_DATA, 0, 0);
        let (_, data) = draw_problem(&mut rng, 4, 4000).unwrap();
        let var = data.x.iter().map(|v| v * v).sum::<f64>() / data.x.len() as f64;
        assert!((var - 1.0 / 16.0).abs() < 0.005);
        assert!(data.y.iter().all(|v| *v == 1.0 || *v == -1.0));
    }

    #[test]
    fn map_converges_on_a_draw_with_a_flat_objective() {
        // This draw used to leave Newton stuck with gradient norm 1.8e-7.
        let mut rng = replicate_rng(20_240_601, STREAM_DATA, 0, 2);
        let (_, data) = draw_problem(&mut rng, 3, 200).unwrap();
        let map = logistic_map(&data).unwrap();
        assert!(crate::estimators::logistic::logistic_gradient_norm(&data, &map, 1.0) <= 1e-10);
    }

    #[test]
    fn small_run_layout() {
        let config = ExperimentConfig {
            n: 3,
            replicates: 3,
            grid: vec![200.0],
            logistic: LogisticSettings {
                convergence_n: 2,
                convergence_m: vec![100, 400],
                convergence_replicates: 2,
            },
            ..ExperimentConfig::preset(Experiment::Logistic)
        };
        let report = run(&config).unwrap();
        assert_eq!(report.records.len(), 3 * 3);
        assert_eq!(report.convergence_records.len(), 4);
        assert!(report.summary.convergence.is_some());
    }
}
