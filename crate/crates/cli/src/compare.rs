//! `cvalue compare`: c-value of an alternative estimate against a default on
//! user data.
//!
//! Which bound is used depends on the estimator pair:
//!
//! * MLE against Lindley–Smith, Morris or James–Stein with isotropic noise
//!   uses the exact chi-squared bound;
//! * a pair involving `hier_regression` compares predictions on the test
//!   rows, with the sampling covariance of the OLS prediction as `Σ`;
//! * `logistic_mle` against `logistic_map` goes through the Laplace
//!   approximation around the MLE;
//! * everything else is compared with the approximate affine bound.

use std::path::{Path, PathBuf};

use cvalue_core::affine::{AffineBound, AffineComparison};
use cvalue_core::cvalue::{c_value, two_stage_select, CValueResult, LowerBound, Report};
use cvalue_core::estimators::{
    fay_herriot_mean, gp_posterior_mean, hier_regression_posterior, james_stein, james_stein_bound_spec,
    lindley_smith, logistic_laplace_affine, logistic_map, morris_shrinkage, two_source_posterior,
    two_source_spatial_posterior, AffineEstimate, EstimatorSpec, LogisticData,
};
use cvalue_core::linalg::AffineForm;
use cvalue_core::normal_means::SubspaceShrinkageSpec;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io::{read_matrix, read_vector};

/// Data files of a comparison. Relative paths are resolved against the
/// directory of the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFiles {
    /// Observations; labels in `{+1, −1}` for the logistic pair, training
    /// responses for `hier_regression`.
    pub y: PathBuf,
    /// Dense noise covariance.
    pub sigma: Option<PathBuf>,
    /// Diagonal of the noise covariance.
    pub sigma_diag: Option<PathBuf>,
    /// Isotropic noise standard deviation. With no noise given at all, unit
    /// noise is assumed.
    pub noise_sd: Option<f64>,
    /// Design matrix: Morris and Fay–Herriot regressors, logistic
    /// covariates, or the training design of `hier_regression`.
    pub x: Option<PathBuf>,
    /// Auxiliary measurement for the two-source pairs, auxiliary responses
    /// for `hier_regression`.
    pub z: Option<PathBuf>,
    /// Spatial covariance `K` for `two_source_spatial`.
    pub kernel: Option<PathBuf>,
    /// `N × 3` coordinates `(lat, lon, t)` for `gp_posterior`.
    pub coords: Option<PathBuf>,
    /// Auxiliary design of `hier_regression`.
    pub aux_x: Option<PathBuf>,
    /// Test rows of `hier_regression`.
    pub test_x: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub model: ModelFiles,
    pub default: EstimatorSpec,
    pub alternative: EstimatorSpec,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Recorded in the output; the comparison itself is deterministic.
    #[serde(default)]
    pub seed: u64,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub berry_esseen: bool,
}

fn default_alpha() -> f64 {
    0.95
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Exact,
    Affine,
    AffineBerryEsseen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub alpha: f64,
    /// `None` (JSON `null`) stands for `−∞`.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub role: String,
    pub kind: String,
    pub estimate: Vec<f64>,
    /// `‖estimate − y‖²` against the vector the bound is computed from.
    pub residual_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareOutput {
    pub c_value: f64,
    pub alpha: f64,
    pub selected_at_alpha: Report,
    pub bound_kind: BoundKind,
    pub bound_curve: Vec<BoundPoint>,
    pub estimator_summaries: Vec<EstimatorSummary>,
    pub warnings: Vec<String>,
    pub seed: u64,
}

/// Loads a config file and resolves its data paths against the file's
/// directory.
pub fn load_config(path: &Path) -> Result<CompareConfig> {
    let mut config: CompareConfig = crate::io::read_json(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let m = &mut config.model;
    let fix = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    fix(&mut m.y);
    for p in [
        &mut m.sigma,
        &mut m.sigma_diag,
        &mut m.x,
        &mut m.z,
        &mut m.kernel,
        &mut m.coords,
        &mut m.aux_x,
        &mut m.test_x,
    ]
    .into_iter()
    .flatten()
    {
        fix(p);
    }
    if let Some(out) = config.output.as_mut() {
        fix(out);
    }
    Ok(config)
}

fn require<'a>(field: &'a Option<PathBuf>, name: &str, kind: &str) -> Result<&'a Path> {
    field
        .as_deref()
        .ok_or_else(|| CliError::input(format!("model.{name} is required by the {kind} estimator")))
}

fn check_len(path: &Path, what: &str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(CliError::in_file(path, format!("{what}: expected {expected}, found {got}")))
    }
}

/// Noise covariance of the normal-means family.
#[derive(Debug, Clone)]
enum Noise {
    Isotropic(f64),
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
}

impl Noise {
    fn load(m: &ModelFiles, n: usize) -> Result<Noise> {
        let given = [m.sigma.is_some(), m.sigma_diag.is_some(), m.noise_sd.is_some()];
        if given.iter().filter(|g| **g).count() > 1 {
            return Err(CliError::input("give at most one of model.sigma, model.sigma_diag, model.noise_sd"));
        }
        if let Some(sd) = m.noise_sd {
            if !(sd > 0.0) || !sd.is_finite() {
                return Err(CliError::input(format!("model.noise_sd must be positive, got {sd}")));
            }
            return Ok(Noise::Isotropic(sd));
        }
        if let Some(p) = &m.sigma_diag {
            let d = read_vector(p)?;
            check_len(p, "number of variances", n, d.len())?;
            if d.iter().any(|v| !(*v > 0.0)) {
                return Err(CliError::in_file(p, "variances must be positive"));
            }
            return Ok(Noise::Diagonal(d));
        }
        if let Some(p) = &m.sigma {
            let s = read_matrix(p)?;
            check_len(p, "covariance rows", n, s.nrows())?;
            check_len(p, "covariance columns", n, s.ncols())?;
            return Ok(Noise::Dense(s));
        }
        Ok(Noise::Isotropic(1.0))
    }

    fn matrix(&self, n: usize) -> DMatrix<f64> {
        match self {
            Noise::Isotropic(sd) => DMatrix::identity(n, n) * (sd * sd),
            Noise::Diagonal(d) => DMatrix::from_diagonal(d),
            Noise::Dense(s) => s.clone(),
        }
    }

    /// The noise standard deviation when `Σ = σ² I`.
    fn isotropic_sd(&self) -> Option<f64> {
        match self {
            Noise::Isotropic(sd) => Some(*sd),
            Noise::Diagonal(d) => {
                let v = d[0];
                d.iter().all(|x| *x == v).then(|| v.sqrt())
            }
            Noise::Dense(s) => {
                let v = s[(0, 0)];
                let n = s.nrows();
                let iso = (0..n).all(|i| (0..n).all(|j| s[(i, j)] == if i == j { v } else { 0.0 }));
                (iso && v > 0.0).then(|| v.sqrt())
            }
        }
    }

    fn diagonal(&self, n: usize) -> Option<DVector<f64>> {
        match self {
            Noise::Isotropic(sd) => Some(DVector::from_element(n, sd * sd)),
            Noise::Diagonal(d) => Some(d.clone()),
            Noise::Dense(s) => {
                let off_diag_zero = (0..n).all(|i| (0..n).all(|j| i == j || s[(i, j)] == 0.0));
                off_diag_zero.then(|| s.diagonal())
            }
        }
    }
}

/// A resolved comparison: the vector the bound is computed from, its noise
/// covariance and the two estimators as affine maps of it.
struct AffineSetup {
    y: DVector<f64>,
    sigma: DMatrix<f64>,
    default: AffineEstimate,
    alternative: AffineEstimate,
    /// Estimates reported instead of the affine ones (the exact MAP).
    reported: [Option<DVector<f64>>; 2],
    warnings: Vec<String>,
}

fn is_logistic(s: &EstimatorSpec) -> bool {
    matches!(s, EstimatorSpec::LogisticMle | EstimatorSpec::LogisticMap)
}

fn is_hier(s: &EstimatorSpec) -> bool {
    matches!(s, EstimatorSpec::HierRegression { .. })
}

fn ignored_noise(m: &ModelFiles, family: &str) -> Vec<String> {
    if m.sigma.is_some() || m.sigma_diag.is_some() || m.noise_sd.is_some() {
        vec![format!("the noise covariance is derived from the {family} model; the given noise was ignored")]
    } else {
        Vec::new()
    }
}

fn logistic_setup(config: &CompareConfig) -> Result<AffineSetup> {
    let m = &config.model;
    for s in [&config.default, &config.alternative] {
        if !is_logistic(s) {
            return Err(CliError::input(format!(
                "{} cannot be compared with a logistic estimator",
                s.name()
            )));
        }
    }
    let x_path = require(&m.x, "x", "logistic")?;
    let x = read_matrix(x_path)?;
    let labels = read_vector(&m.y)?;
    check_len(&m.y, "number of labels", x.nrows(), labels.len())?;
    let data = LogisticData::new(x, labels).map_err(|e| CliError::in_file(&m.y, e))?;
    let lap = logistic_laplace_affine(&data)?;
    let map = logistic_map(&data)?;
    let resolve = |s: &EstimatorSpec| -> Result<(AffineEstimate, Option<DVector<f64>>)> {
        Ok(match s {
            EstimatorSpec::LogisticMle => (
                AffineEstimate {
                    estimate: lap.mle.clone(),
                    form: lap.default_form(),
                },
                None,
            ),
            _ => (
                AffineEstimate {
                    estimate: lap.estimate.clone(),
                    form: lap.alternative_form(),
                },
                Some(map.clone()),
            ),
        })
    };
    let (default, rd) = resolve(&config.default)?;
    let (alternative, ra) = resolve(&config.alternative)?;
    Ok(AffineSetup {
        y: lap.mle.clone(),
        sigma: lap.sigma_tilde.clone(),
        default,
        alternative,
        reported: [rd, ra],
        warnings: ignored_noise(m, "logistic"),
    })
}

fn hier_setup(config: &CompareConfig) -> Result<AffineSetup> {
    let m = &config.model;
    let sigma_beta = [&config.default, &config.alternative]
        .into_iter()
        .find_map(|s| match s {
            EstimatorSpec::HierRegression { sigma_beta } => Some(*sigma_beta),
            _ => None,
        })
        .expect("called with a hier_regression spec");
    for s in [&config.default, &config.alternative] {
        if !matches!(s, EstimatorSpec::Mle | EstimatorSpec::HierRegression { .. }) {
            return Err(CliError::input(format!(
                "{} cannot be compared with hier_regression; use mle or hier_regression",
                s.name()
            )));
        }
        if let EstimatorSpec::HierRegression { sigma_beta: other } = s {
            if *other != sigma_beta {
                return Err(CliError::input("both hier_regression estimators must use the same sigma_beta"));
            }
        }
    }
    let train_x = read_matrix(require(&m.x, "x", "hier_regression")?)?;
    let train_y = read_vector(&m.y)?;
    let aux_x = read_matrix(require(&m.aux_x, "aux_x", "hier_regression")?)?;
    let aux_z = read_vector(require(&m.z, "z", "hier_regression")?)?;
    let test_x = read_matrix(require(&m.test_x, "test_x", "hier_regression")?)?;
    check_len(&m.y, "number of training responses", train_x.nrows(), train_y.len())?;
    check_len(m.z.as_deref().unwrap(), "number of auxiliary responses", aux_x.nrows(), aux_z.len())?;
    let h = hier_regression_posterior(&train_x, &train_y, &aux_x, &aux_z, &test_x, sigma_beta)?;
    let resolve = |s: &EstimatorSpec| match s {
        EstimatorSpec::Mle => AffineEstimate {
            estimate: h.mle.clone(),
            form: AffineForm::identity(h.mle.len()),
        },
        _ => AffineEstimate {
            estimate: h.estimate.clone(),
            form: h.form.clone(),
        },
    };
    Ok(AffineSetup {
        y: h.mle.clone(),
        sigma: h.covariance.clone(),
        default: resolve(&config.default),
        alternative: resolve(&config.alternative),
        reported: [None, None],
        warnings: ignored_noise(m, "hierarchical regression"),
    })
}

/// Affine form of a normal-means estimator applied to `y`.
fn normal_estimator(spec: &EstimatorSpec, m: &ModelFiles, y: &DVector<f64>, noise: &Noise) -> Result<AffineEstimate> {
    let n = y.len();
    let kind = spec.name();
    let iso = || {
        noise
            .isotropic_sd()
            .ok_or_else(|| CliError::input(format!("{kind} needs isotropic noise (model.noise_sd)")))
    };
    let design = |what: &str| -> Result<DMatrix<f64>> {
        let p = require(&m.x, "x", what)?;
        let x = read_matrix(p)?;
        check_len(p, "design rows", n, x.nrows())?;
        Ok(x)
    };
    let aux = || -> Result<DVector<f64>> {
        let p = require(&m.z, "z", kind)?;
        let z = read_vector(p)?;
        check_len(p, "auxiliary length", n, z.len())?;
        Ok(z)
    };
    Ok(match spec {
        EstimatorSpec::Mle => AffineEstimate {
            estimate: y.clone(),
            form: AffineForm::identity(n),
        },
        EstimatorSpec::LindleySmith { tau } => lindley_smith(y, tau / iso()?)?,
        EstimatorSpec::Morris { tau } => morris_shrinkage(y, &design(kind)?, tau / iso()?)?,
        EstimatorSpec::FayHerriot { tau, beta } => {
            let var = noise
                .diagonal(n)
                .ok_or_else(|| CliError::input("fay_herriot needs a diagonal noise covariance"))?;
            let x = design(kind)?;
            if x.ncols() != beta.len() {
                return Err(CliError::input(format!(
                    "fay_herriot has {} coefficients but the design has {} columns",
                    beta.len(),
                    x.ncols()
                )));
            }
            fay_herriot_mean(y, &x, &DVector::from_column_slice(beta), *tau, &var)?
        }
        EstimatorSpec::TwoSource { sigma_y, sigma_z, sigma_delta } => {
            two_source_posterior(y, &aux()?, *sigma_y, *sigma_z, *sigma_delta)?
        }
        EstimatorSpec::TwoSourceSpatial { sigma_y, sigma_z, sigma_delta } => {
            let p = require(&m.kernel, "kernel", kind)?;
            let k = read_matrix(p)?;
            check_len(p, "kernel rows", n, k.nrows())?;
            check_len(p, "kernel columns", n, k.ncols())?;
            two_source_spatial_posterior(y, &aux()?, *sigma_y, *sigma_z, *sigma_delta, &k)?
        }
        EstimatorSpec::GpPosterior { kernel, sigma_eps } => {
            let p = require(&m.coords, "coords", kind)?;
            let c = read_matrix(p)?;
            check_len(p, "coordinate rows", n, c.nrows())?;
            check_len(p, "coordinate columns", 3, c.ncols())?;
            let coords: Vec<[f64; 3]> = c.row_iter().map(|r| [r[0], r[1], r[2]]).collect();
            gp_posterior_mean(&coords, y, kernel, *sigma_eps)?
        }
        EstimatorSpec::JamesStein => {
            return Err(CliError::input(
                "james_stein is not affine; it can only be the alternative to mle with isotropic noise",
            ))
        }
        EstimatorSpec::HierRegression { .. } | EstimatorSpec::LogisticMle | EstimatorSpec::LogisticMap => {
            unreachable!("handled by their own pathways")
        }
    })
}

/// The bound and the alternative estimate.
type ExactBound = (Box<dyn LowerBound>, DVector<f64>);

/// The exact bound for MLE against shrinkage toward a subspace, when it
/// applies. The James–Stein bound is computed at unit noise on `y/σ` and
/// rescaled by `σ²`.
fn exact_bound(
    config: &CompareConfig,
    y: &DVector<f64>,
    noise: &Noise,
) -> Result<Option<ExactBound>> {
    if config.default != EstimatorSpec::Mle {
        return Ok(None);
    }
    let Some(sd) = noise.isotropic_sd() else {
        return Ok(None);
    };
    let n = y.len();
    Ok(match &config.alternative {
        EstimatorSpec::LindleySmith { tau } => {
            let spec = SubspaceShrinkageSpec::new(y.clone(), &DMatrix::from_element(n, 1, 1.0), *tau, sd)?;
            let est = spec.alternative_estimate();
            Some((Box::new(spec), est))
        }
        EstimatorSpec::Morris { tau } => {
            let p = require(&config.model.x, "x", "morris")?;
            let x = read_matrix(p)?;
            check_len(p, "design rows", n, x.nrows())?;
            let spec = SubspaceShrinkageSpec::new(y.clone(), &x, *tau, sd)?;
            let est = spec.alternative_estimate();
            Some((Box::new(spec), est))
        }
        EstimatorSpec::JamesStein => {
            let scaled = y / sd;
            let spec = james_stein_bound_spec(&scaled)?;
            let est = james_stein(&scaled)?.estimate * sd;
            let var = sd * sd;
            let bound = move |alpha: f64| spec.evaluate(alpha).map(|b| var * b);
            Some((Box::new(bound), est))
        }
        _ => None,
    })
}

fn summary(role: &str, spec: &EstimatorSpec, estimate: &DVector<f64>, y: &DVector<f64>) -> EstimatorSummary {
    EstimatorSummary {
        role: role.to_string(),
        kind: spec.name().to_string(),
        estimate: estimate.iter().copied().collect(),
        residual_sq: (estimate - y).norm_squared(),
    }
}

fn finish(
    config: &CompareConfig,
    c: CValueResult,
    bound_kind: BoundKind,
    summaries: Vec<EstimatorSummary>,
    mut warnings: Vec<String>,
) -> CompareOutput {
    if c.degenerate {
        warnings.push("the bound is positive at every level; the c-value is 1".into());
    }
    if !c.monotone {
        warnings.push("the bound is not monotone in alpha; the c-value is the conservative grid value".into());
    }
    CompareOutput {
        c_value: c.c_value,
        alpha: config.alpha,
        selected_at_alpha: two_stage_select(c.c_value, config.alpha),
        bound_kind,
        bound_curve: c
            .bound_samples
            .iter()
            .map(|&(alpha, b)| BoundPoint {
                alpha,
                bound: (b != f64::NEG_INFINITY).then_some(b),
            })
            .collect(),
        estimator_summaries: summaries,
        warnings,
        seed: config.seed,
    }
}

pub fn run_compare(config: &CompareConfig) -> Result<CompareOutput> {
    if !(0.0..1.0).contains(&config.alpha) {
        return Err(CliError::input(format!("alpha must lie in [0, 1), got {}", config.alpha)));
    }
    config.default.validate()?;
    config.alternative.validate()?;

    let setup = if is_logistic(&config.default) || is_logistic(&config.alternative) {
        logistic_setup(config)?
    } else if is_hier(&config.default) || is_hier(&config.alternative) {
        hier_setup(config)?
    } else {
        let m = &config.model;
        let y = read_vector(&m.y)?;
        let noise = Noise::load(m, y.len())?;
        if let Some((bound, alt)) = exact_bound(config, &y, &noise)? {
            let mut warnings = Vec::new();
            if config.berry_esseen {
                warnings.push("the Berry-Esseen correction only applies to the approximate bound; ignored".into());
            }
            let c = c_value(bound.as_ref())?;
            let summaries = vec![
                summary("default", &config.default, &y, &y),
                summary("alternative", &config.alternative, &alt, &y),
            ];
            return Ok(finish(config, c, BoundKind::Exact, summaries, warnings));
        }
        AffineSetup {
            default: normal_estimator(&config.default, m, &y, &noise)?,
            alternative: normal_estimator(&config.alternative, m, &y, &noise)?,
            sigma: noise.matrix(y.len()),
            y,
            reported: [None, None],
            warnings: Vec::new(),
        }
    };

    let cmp = AffineComparison::new(
        setup.sigma,
        setup.default.form.clone(),
        setup.alternative.form.clone(),
        setup.y.clone(),
    )?;
    let (bound, kind) = if config.berry_esseen {
        (AffineBound::with_berry_esseen(&cmp)?, BoundKind::AffineBerryEsseen)
    } else {
        (AffineBound::new(&cmp)?, BoundKind::Affine)
    };
    let c = c_value(&bound)?;
    let mut warnings = setup.warnings;
    warnings.extend(bound.functionals.warnings.iter().cloned());
    let [rd, ra] = setup.reported;
    let summaries = vec![
        summary("default", &config.default, rd.as_ref().unwrap_or(&setup.default.estimate), &setup.y),
        summary("alternative", &config.alternative, ra.as_ref().unwrap_or(&setup.alternative.estimate), &setup.y),
    ];
    Ok(finish(config, c, kind, summaries, warnings))
}

pub fn output_json(out: &CompareOutput) -> Result<String> {
    let mut s = serde_json::to_string_pretty(out).map_err(|e| CliError::input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
