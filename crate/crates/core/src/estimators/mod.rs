//! Default and alternative estimators, each with its affine representation
//! where one exists.

pub mod fay_herriot;
pub mod gp;
pub mod hier_regression;
pub mod logistic;
pub mod shrinkage;
pub mod two_source;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::AffineForm;

pub use fay_herriot::{eb_fit_fay_herriot, fay_herriot_gls, fay_herriot_mean, FayHerriotFit, NoiseScale};
pub use gp::{gp_posterior_from_kernel, gp_posterior_mean, kernel_matrix, GpKernel, GpKernelKind, SqExpKernel};
pub use hier_regression::{hier_regression_posterior, HierRegression};
pub use logistic::{
    laplace_at, logistic_laplace_affine, logistic_map, logistic_mle, LaplaceAffine, LogisticData,
};
pub use shrinkage::{
    james_stein, james_stein_bound_spec, lindley_smith, morris_shrinkage, sure_selector, JamesStein,
    SureRule, SureSelection,
};
pub use two_source::{two_source_posterior, two_source_spatial_posterior};

/// An estimate together with the affine map that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineEstimate {
    pub estimate: DVector<f64>,
    pub form: AffineForm,
}

/// Declarative description of an estimator; the data it needs (designs,
/// coordinates, auxiliary vectors) are supplied separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorSpec {
    Mle,
    LindleySmith {
        tau: f64,
    },
    Morris {
        tau: f64,
    },
    JamesStein,
    FayHerriot {
        tau: f64,
        beta: Vec<f64>,
    },
    TwoSource {
        sigma_y: f64,
        sigma_z: f64,
        sigma_delta: f64,
    },
    TwoSourceSpatial {
        sigma_y: f64,
        sigma_z: f64,
        sigma_delta: f64,
    },
    GpPosterior {
        kernel: GpKernel,
        sigma_eps: f64,
    },
    HierRegression {
        sigma_beta: f64,
    },
    LogisticMle,
    LogisticMap,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite and positive, got {v}")))
    }
}

impl EstimatorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorSpec::Mle => "mle",
            EstimatorSpec::LindleySmith { .. } => "lindley_smith",
            EstimatorSpec::Morris { .. } => "morris",
            EstimatorSpec::JamesStein => "james_stein",
            EstimatorSpec::FayHerriot { .. } => "fay_herriot",
            EstimatorSpec::TwoSource { .. } => "two_source",
            EstimatorSpec::TwoSourceSpatial { .. } => "two_source_spatial",
            EstimatorSpec::GpPosterior { .. } => "gp_posterior",
            EstimatorSpec::HierRegression { .. } => "hier_regression",
            EstimatorSpec::LogisticMle => "logistic_mle",
            EstimatorSpec::LogisticMap => "logistic_map",
        }
    }

    /// Checks the scalar parameters; data-dependent checks happen when the
    /// estimator is evaluated.
    pub fn validate(&self) -> Result<()> {
        match self {
            EstimatorSpec::LindleySmith { tau } | EstimatorSpec::Morris { tau } => positive("tau", *tau),
            EstimatorSpec::FayHerriot { tau, beta } => {
                positive("tau", *tau)?;
                if beta.iter().any(|b| !b.is_finite()) {
                    return Err(Error::invalid("beta must be finite"));
                }
                Ok(())
            }
            EstimatorSpec::TwoSource { sigma_y, sigma_z, sigma_delta }
            | EstimatorSpec::TwoSourceSpatial { sigma_y, sigma_z, sigma_delta } => {
                positive("sigma_y", *sigma_y)?;
                positive("sigma_z", *sigma_z)?;
                if !(*sigma_delta >= 0.0) || !sigma_delta.is_finite() {
                    return Err(Error::invalid("sigma_delta must be finite and non-negative"));
                }
                Ok(())
            }
            EstimatorSpec::GpPosterior { kernel, sigma_eps } => {
                kernel.validate()?;
                positive("sigma_eps", *sigma_eps)
            }
            EstimatorSpec::HierRegression { sigma_beta } => positive("sigma_beta", *sigma_beta),
            EstimatorSpec::Mle
            | EstimatorSpec::JamesStein
            | EstimatorSpec::LogisticMle
            | EstimatorSpec::LogisticMap => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trips_through_json_shape() {
        let s = EstimatorSpec::LindleySmith { tau: 1.5 };
        assert_eq!(s.name(), "lindley_smith");
        assert!(s.validate().is_ok());
        assert!(EstimatorSpec::Morris { tau: -1.0 }.validate().is_err());
        assert!(EstimatorSpec::TwoSource { sigma_y: 1.0, sigma_z: 1.0, sigma_delta: -0.1 }.validate().is_err());
    }
}
