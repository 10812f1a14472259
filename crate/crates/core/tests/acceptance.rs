//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! status 1 if any criterion fails. Every run uses the preset seed.
//!
//! Run with `cargo test --release -p cvalue-core --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cvalue_core::affine::{u_quadratic, QuadraticUInputs};
use cvalue_core::simulation::{run_experiment, Experiment, ExperimentConfig, Proportion, SimulationReport};
use cvalue_core::special_fn::{ncchisq_cdf, ncchisq_quantile, normal_cdf, normal_quantile, ChiSqParams, Probability};
use rand::Rng;

const CALIBRATION_GRID: [f64; 5] = [0.0, 0.5, 1.0, 1.5, 2.0];
const CALIBRATION_BUDGET: Duration = Duration::from_secs(120);
const TABLE_POINT: f64 = 1.7;
const TABLE_REPLICATES: usize = 1000;
const ALT_REPORTED_AT_95_MAX: f64 = 1.0;
const ALL_DR_AT_95: (f64, f64) = (54.0, 5.0);
const DLL_AR_AT_50: (f64, f64) = (9.0, 4.0);
const SURE_WRONG: (f64, f64) = (80.0, 5.0);
const SURE_ALTERNATIVE: (f64, f64) = (62.0, 6.0);
const POWER_MIN: f64 = 0.9;
const PITFALL_MLE_BETTER: (f64, f64) = (0.68, 0.02);
const SLOPE_APPROX_MAP: (f64, f64) = (-2.0, 0.3);
const SLOPE_MLE_TRUTH: (f64, f64) = (-0.5, 0.15);
const ORACLE_TOL: f64 = 1e-8;
const GP_MEDIAN_C_MIN: f64 = 0.95;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

struct Checks {
    pass: bool,
    items: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Checks {
            pass: true,
            items: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, item: String) {
        self.pass &= ok;
        self.items.push(if ok { item } else { format!("{item} [FAIL]") });
    }

    fn outcome(self, name: &'static str) -> Outcome {
        Outcome {
            name,
            pass: self.pass,
            detail: self.items.join("; "),
        }
    }
}

fn within(v: f64, (centre, tol): (f64, f64)) -> bool {
    (v - centre).abs() <= tol
}

fn band(alpha: f64, n: usize) -> f64 {
    alpha - 3.0 * (alpha * (1.0 - alpha) / n as f64).sqrt()
}

fn upper_band(p: f64, n: usize) -> f64 {
    p + 3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

fn run(config: &ExperimentConfig) -> SimulationReport {
    run_experiment(config, Some(1)).unwrap_or_else(|e| panic!("{} run failed: {e}", config.experiment))
}

fn coverage_checks(report: &SimulationReport, checks: &mut Checks) {
    for cell in &report.summary.cells {
        let Proportion { estimate, n, .. } = cell.coverage;
        let lo = band(cell.alpha, n);
        checks.check(
            estimate >= lo,
            format!("g={:.2} a={:.2}: {:.3} >= {:.3}", cell.grid_value, cell.alpha, estimate, lo),
        );
    }
}

fn coverage_bound_one() -> Outcome {
    let config = ExperimentConfig {
        grid: CALIBRATION_GRID.to_vec(),
        ..ExperimentConfig::preset(Experiment::Calibration)
    };
    let start = Instant::now();
    let report = run(&config);
    let elapsed = start.elapsed();
    let mut checks = Checks::new();
    coverage_checks(&report, &mut checks);
    checks.check(
        elapsed < CALIBRATION_BUDGET,
        format!("runtime {:.1}s single-threaded", elapsed.as_secs_f64()),
    );
    checks.outcome("coverage of the exact bound (N=50, 500 reps, 5 grid points)")
}

fn selection_criteria() -> (Outcome, Outcome) {
    let report = run(&ExperimentConfig::preset(Experiment::Selection));
    let mut guarantee = Checks::new();
    for cell in report.summary.cells.iter().filter(|c| c.alpha == 0.95) {
        let p = cell.worse_than_default;
        let limit = upper_band(0.05, p.n);
        guarantee.check(
            p.estimate <= limit,
            format!("g={:.2}: {:.3} <= {:.3}", cell.grid_value, p.estimate, limit),
        );
    }
    let mut power = Checks::new();
    let sel = report.summary.cell(0.0, 0.95).expect("grid point 0").selection.estimate;
    power.check(sel >= POWER_MIN, format!("P[c > 0.95] at g=0: {sel:.3} >= {POWER_MIN}"));
    (
        guarantee.outcome("two-stage rule loses to the default at most 5% + 3 SE (alpha 0.95)"),
        power.outcome("selection power at g=0, alpha 0.95"),
    )
}

fn table_two() -> Outcome {
    let config = ExperimentConfig {
        replicates: TABLE_REPLICATES,
        grid: vec![TABLE_POINT],
        alphas: vec![0.5, 0.95],
        ..ExperimentConfig::preset(Experiment::Selection)
    };
    let report = run(&config);
    let mut checks = Checks::new();
    let high = report.summary.cell(TABLE_POINT, 0.95).unwrap().contingency.percentages().unwrap();
    let low = report.summary.cell(TABLE_POINT, 0.5).unwrap().contingency.percentages().unwrap();
    let alt95 = high.dll_ar + high.all_ar;
    checks.check(
        alt95 <= ALT_REPORTED_AT_95_MAX,
        format!("alpha 0.95 reports alternative {alt95:.1}% <= {ALT_REPORTED_AT_95_MAX}%"),
    );
    checks.check(
        within(high.all_dr, ALL_DR_AT_95),
        format!("alpha 0.95 (ALL, DR) {:.1}% in {:?}", high.all_dr, ALL_DR_AT_95),
    );
    checks.check(
        within(low.dll_ar, DLL_AR_AT_50),
        format!("alpha 0.5 (DLL, AR) {:.1}% in {:?}", low.dll_ar, DLL_AR_AT_50),
    );
    let sure = &report.summary.sure[0];
    let wrong = 100.0 * sure.wrong.estimate;
    let alt = 100.0 * sure.alternative.estimate;
    checks.check(within(wrong, SURE_WRONG), format!("SURE wrong {wrong:.1}% in {SURE_WRONG:?}"));
    checks.check(
        within(alt, SURE_ALTERNATIVE),
        format!("SURE alternative {alt:.1}% in {SURE_ALTERNATIVE:?}"),
    );
    checks.outcome("contingency table at g=1.7 (1000 reps)")
}

fn pitfall() -> (Outcome, SimulationReport) {
    let report = run(&ExperimentConfig::preset(Experiment::Pitfall));
    let g = &report.summary.grid[0];
    let mut checks = Checks::new();
    let frac = g.default_smaller_loss.estimate;
    checks.check(
        within(frac, PITFALL_MLE_BETTER),
        format!("MLE smaller loss {frac:.4} in {PITFALL_MLE_BETTER:?}"),
    );
    let d = g.risk_difference;
    checks.check(
        d.mean <= 3.0 * d.se,
        format!(
            "risk(alt) - risk(MLE) = {:.4} <= 3 SE = {:.4} (risks {:.4} vs {:.4})",
            d.mean,
            3.0 * d.se,
            g.risk_alt.mean,
            g.risk_default.mean
        ),
    );
    (checks.outcome("risk pitfall (N=2, 5000 reps)"), report)
}

fn empirical_bayes() -> Outcome {
    let report = run(&ExperimentConfig::preset(Experiment::Eb));
    let mut checks = Checks::new();
    coverage_checks(&report, &mut checks);
    checks.outcome("James-Stein bound coverage (N=50, 500 reps)")
}

fn logistic() -> (Outcome, Outcome) {
    let report = run(&ExperimentConfig::preset(Experiment::Logistic));
    let conv = report.summary.convergence.as_ref().expect("convergence summary");
    let mut slopes = Checks::new();
    slopes.check(
        within(conv.slope_approx_map, SLOPE_APPROX_MAP),
        format!("approx-MAP slope {:.3} in {SLOPE_APPROX_MAP:?}", conv.slope_approx_map),
    );
    slopes.check(
        within(conv.slope_mle_truth, SLOPE_MLE_TRUTH),
        format!("MLE-truth slope {:.3} in {SLOPE_MLE_TRUTH:?}", conv.slope_mle_truth),
    );
    slopes.items.push(format!("{} rows, {} dropped", conv.rows, conv.dropped));
    let mut coverage = Checks::new();
    coverage_checks(&report, &mut coverage);
    coverage.items.push(format!("{} separable replicates dropped", report.summary.dropped_replicates));
    (
        slopes.outcome("logistic approximation rates (N=2, 25 reps per M)"),
        coverage.outcome("logistic bound coverage (N=25, M=1000, 500 reps)"),
    )
}

fn oracles() -> Outcome {
    let mut checks = Checks::new();
    let worst = common::conjugacy_cases(1)
        .iter()
        .map(|c| (c.name, c.error()))
        .fold(("", 0.0f64), |a, b| if b.1 > a.1 { b } else { a });
    checks.check(
        worst.1 <= ORACLE_TOL,
        format!("conjugacy max error {:.1e} ({})", worst.1, worst.0),
    );

    let mut r = common::rng(201);
    let mut u_err = 0.0f64;
    for i in 0..100 {
        let gamma = r.random_range(-20.0..40.0);
        let eta = r.random_range(-3.5..0.0);
        let rho = r.random_range(0.0..50.0);
        let nu = if i % 10 == 0 { 0.0 } else { r.random_range(0.0..10.0) };
        let got = u_quadratic(QuadraticUInputs { gamma, eta, rho, nu }).unwrap();
        let want = common::u_bisection(gamma, eta, rho, nu);
        u_err = u_err.max((got - want).abs() / want.max(1.0));
    }
    checks.check(u_err <= ORACLE_TOL, format!("u_quadratic vs bisection {u_err:.1e} on 100 instances"));

    let mut sf_err = 0.0f64;
    for &df in &[1u32, 4, 49, 300] {
        for &lambda in &[0.0, 0.7, 25.0, 400.0] {
            let params = ChiSqParams::new(df, lambda).unwrap();
            for &p in &[1e-6, 0.025, 0.5, 0.975, 0.999999] {
                let q = ncchisq_quantile(Probability::new(p).unwrap(), params).unwrap();
                sf_err = sf_err.max((ncchisq_cdf(q, params) - p).abs());
            }
        }
    }
    for &p in &[1e-10, 0.01, 0.3, 0.5, 0.9, 0.999] {
        let z = normal_quantile(Probability::new(p).unwrap()).unwrap();
        sf_err = sf_err.max((normal_cdf(z) - p).abs());
    }
    checks.check(sf_err <= ORACLE_TOL, format!("special-function round trips {sf_err:.1e}"));
    checks.outcome("oracle equivalences")
}

fn gp() -> Outcome {
    let report = run(&ExperimentConfig::preset(Experiment::Gp));
    let mut checks = Checks::new();
    let median = report.summary.grid_point(0.0).unwrap().median_c_value.unwrap();
    checks.check(
        median > GP_MEDIAN_C_MIN,
        format!("multi-scale data: median c {median:.4} > {GP_MEDIAN_C_MIN}"),
    );
    let cell = report.summary.cell(1.0, 0.95).unwrap();
    let mis = cell.worse_than_default;
    let limit = upper_band(0.05, mis.n);
    checks.check(
        mis.estimate <= limit,
        format!("nugget data: mis-selection {:.3} <= {limit:.3}", mis.estimate),
    );
    for s in &report.summary.sequential {
        let p = 2.0 * (1.0 - s.alpha);
        let limit = upper_band(p, s.mis_selection.n);
        checks.check(
            s.mis_selection.estimate <= limit,
            format!("g={}: sequential mis-selection {:.3} <= {limit:.3}", s.grid_value, s.mis_selection.estimate),
        );
    }
    checks.outcome("GP model comparison (25 drifters, 50 seeds per prior)")
}

fn csv_bytes(report: &SimulationReport) -> Vec<u8> {
    let mut out = Vec::new();
    report.write_records_csv(&mut out).unwrap();
    report.write_sure_csv(&mut out).unwrap();
    report.write_convergence_csv(&mut out).unwrap();
    report.write_sequential_csv(&mut out).unwrap();
    out.extend(report.summary_json().unwrap().into_bytes());
    out
}

fn determinism(pitfall_single: &SimulationReport) -> Outcome {
    let mut checks = Checks::new();
    let again = run_experiment(&ExperimentConfig::preset(Experiment::Pitfall), Some(4)).unwrap();
    checks.check(
        csv_bytes(pitfall_single) == csv_bytes(&again),
        "pitfall preset: 1 vs 4 workers".into(),
    );
    for experiment in Experiment::ALL {
        let preset = ExperimentConfig::preset(experiment);
        let config = ExperimentConfig {
            replicates: preset.replicates.min(6),
            grid: preset.grid.iter().copied().take(2).collect(),
            ..preset
        };
        let a = csv_bytes(&run_experiment(&config, Some(1)).unwrap());
        let b = csv_bytes(&run_experiment(&config, Some(3)).unwrap());
        let c = csv_bytes(&run_experiment(&config, Some(1)).unwrap());
        checks.check(a == b && a == c, format!("{experiment}"));
    }
    checks.outcome("byte-identical output across reruns and worker counts")
}

fn main() -> ExitCode {
    let mut outcomes = Vec::new();
    let mut report = |o: Outcome| {
        println!("{} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
        outcomes.push(o.pass);
    };
    report(coverage_bound_one());
    let (guarantee, power) = selection_criteria();
    report(guarantee);
    report(table_two());
    report(power);
    let (pit, pitfall_report) = pitfall();
    report(pit);
    report(empirical_bayes());
    let (slopes, coverage) = logistic();
    report(slopes);
    report(coverage);
    report(oracles());
    report(gp());
    report(determinism(&pitfall_report));
    let failed = outcomes.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
