mod common;

use cvalue_core::special_fn::{ncchisq_cdf, ncchisq_quantile, normal_cdf, normal_quantile, ChiSqParams, Probability};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::gamma_lr;

/// Poisson mixture of central CDFs, summed until the weights are negligible.
fn poisson_mixture_cdf(x: f64, df: u32, lambda: f64) -> f64 {
    let half = 0.5 * lambda;
    let mut total = 0.0;
    let mut log_w = -half;
    for j in 0..5000 {
        if j > 0 {
            log_w += half.ln() - (j as f64).ln();
        }
        let w = log_w.exp();
        total += w * gamma_lr(0.5 * df as f64 + j as f64, 0.5 * x);
        if j as f64 > half && w < 1e-18 {
            break;
        }
    }
    total
}

#[test]
fn cdf_matches_poisson_mixture() {
    for &df in &[1u32, 2, 3, 7, 49, 200] {
        for &lambda in &[0.0, 0.3, 1.5, 10.0, 80.0] {
            let params = ChiSqParams::new(df, lambda).unwrap();
            for &x in &[0.05, 0.5, 2.0, 4.0, 15.0, 60.0, 150.0, 400.0] {
                let want = poisson_mixture_cdf(x, df, lambda);
                let got = ncchisq_cdf(x, params);
                assert!((got - want).abs() < 1e-10, "df {df} lambda {lambda} x {x}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn cdf_matches_monte_carlo() {
    let (df, lambda, x) = (3, 1.5f64, 4.0);
    let shift = lambda.sqrt();
    let mut rng = common::rng(17);
    let n = 2_000_000;
    let mut hits = 0usize;
    for _ in 0..n {
        let a: f64 = rng.sample::<f64, _>(StandardNormal) + shift;
        let b: f64 = rng.sample(StandardNormal);
        let c: f64 = rng.sample(StandardNormal);
        if a * a + b * b + c * c <= x {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    let got = ncchisq_cdf(x, ChiSqParams::new(df, lambda).unwrap());
    assert!((got - p).abs() < 4.0 * se, "{got} vs Monte Carlo {p} ± {se}");
}

#[test]
fn quantile_round_trips() {
    for &df in &[1u32, 4, 49, 300] {
        for &lambda in &[0.0, 0.7, 25.0, 400.0] {
            let params = ChiSqParams::new(df, lambda).unwrap();
            for &p in &[1e-6, 0.01, 0.025, 0.3, 0.5, 0.9, 0.975, 0.999999] {
                let q = ncchisq_quantile(Probability::new(p).unwrap(), params).unwrap();
                let back = ncchisq_cdf(q, params);
                assert!((back - p).abs() <= 1e-8, "df {df} lambda {lambda} p {p}: cdf(q) = {back}");
            }
        }
    }
}

#[test]
fn normal_quantile_round_trips() {
    for &p in &[1e-300, 1e-12, 1e-4, 0.02, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-12] {
        let z = normal_quantile(Probability::new(p).unwrap()).unwrap();
        let back = normal_cdf(z);
        assert!(((back - p) / p.min(1.0 - p).max(1e-300)).abs() <= 1e-8 || (back - p).abs() <= 1e-15, "p {p}: {back}");
    }
}

#[test]
fn cdf_is_monotone_in_both_arguments() {
    for &df in &[1u32, 5, 49] {
        let mut prev_lambda_row: Option<Vec<f64>> = None;
        for i in 0..40 {
            let lambda = i as f64 * 2.5;
            let params = ChiSqParams::new(df, lambda).unwrap();
            let row: Vec<f64> = (0..200).map(|k| ncchisq_cdf(k as f64 * 1.0, params)).collect();
            assert!(row.windows(2).all(|w| w[1] >= w[0] - 1e-13), "df {df} lambda {lambda}: not increasing in x");
            if let Some(prev) = &prev_lambda_row {
                for (k, (a, b)) in row.iter().zip(prev).enumerate() {
                    // The lower-tail sum is accurate to about 1e-14 absolute, so the
                    // ordering cannot be resolved where the CDF is that close to 1.
                    assert!(*a <= b + 1e-13, "df {df} lambda {lambda} x {k}: {a} > {b}");
                }
            }
            prev_lambda_row = Some(row);
        }
    }
}

#[test]
fn central_median_for_49_degrees_of_freedom() {
    let q = ncchisq_quantile(Probability::new(0.5).unwrap(), ChiSqParams::central(49).unwrap()).unwrap();
    let want = 48.33496994010476;
    assert!((q - want).abs() < 1e-8, "{q}");
    assert!((poisson_mixture_cdf(q, 49, 0.0) - 0.5).abs() < 1e-10);
}
