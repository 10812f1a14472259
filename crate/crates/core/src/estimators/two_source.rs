//! Pooling a primary measurement `y` of `θ` with an auxiliary measurement
//! `z` of a related quantity `η`, where `θ − η` has covariance
//! `2K + 2σ_δ² I` (`K = 0` without a spatial component).

use nalgebra::{DMatrix, DVector};

use super::AffineEstimate;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{psd_eigen, spd_inverse, symmetrize, AffineForm};

fn check_scale(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite and positive, got {v}")))
    }
}

/// `((2σ_δ² + σ_z²) y + σ_y² z) / (2σ_δ² + σ_y² + σ_z²)`, coordinatewise.
pub fn two_source_posterior(
    y: &DVector<f64>,
    z: &DVector<f64>,
    sigma_y: f64,
    sigma_z: f64,
    sigma_delta: f64,
) -> Result<AffineEstimate> {
    check_dim("auxiliary vector", y.len(), z.len())?;
    check_scale("sigma_y", sigma_y)?;
    check_scale("sigma_z", sigma_z)?;
    if !(sigma_delta >= 0.0) || !sigma_delta.is_finite() {
        return Err(Error::invalid(format!("sigma_delta must be finite and non-negative, got {sigma_delta}")));
    }
    let (vy, vz, vd) = (sigma_y * sigma_y, sigma_z * sigma_z, sigma_delta * sigma_delta);
    let denom = 2.0 * vd + vy + vz;
    let wy = (2.0 * vd + vz) / denom;
    let wz = vy / denom;
    let n = y.len();
    let form = AffineForm::new(DMatrix::identity(n, n) * wy, z * wz)?;
    Ok(AffineEstimate {
        estimate: form.apply(y)?,
        form,
    })
}

/// `[I + σ_y² V⁻¹]⁻¹ y + [I + σ_y⁻² V]⁻¹ z` with `V = 2K + 2σ_δ² I + σ_z² I`.
pub fn two_source_spatial_posterior(
    y: &DVector<f64>,
    z: &DVector<f64>,
    sigma_y: f64,
    sigma_z: f64,
    sigma_delta: f64,
    kernel: &DMatrix<f64>,
) -> Result<AffineEstimate> {
    let n = y.len();
    check_dim("auxiliary vector", n, z.len())?;
    check_dim("kernel rows", n, kernel.nrows())?;
    check_dim("kernel columns", n, kernel.ncols())?;
    check_scale("sigma_y", sigma_y)?;
    check_scale("sigma_z", sigma_z)?;
    if !(sigma_delta >= 0.0) || !sigma_delta.is_finite() {
        return Err(Error::invalid(format!("sigma_delta must be finite and non-negative, got {sigma_delta}")));
    }
    psd_eigen(kernel)?;
    let vy = sigma_y * sigma_y;
    let v = kernel * 2.0 + DMatrix::identity(n, n) * (2.0 * sigma_delta * sigma_delta + sigma_z * sigma_z);
    // With S = (V + σ_y² I)⁻¹ the two weights are V S = I − σ_y² S and σ_y² S.
    let s = spd_inverse(&(&v + DMatrix::identity(n, n) * vy), "pooled covariance")?;
    let z_weight = &s * vy;
    let y_weight = symmetrize(&(DMatrix::identity(n, n) - &z_weight));
    let form = AffineForm::new(y_weight, &z_weight * z)?;
    Ok(AffineEstimate {
        estimate: form.apply(y)?,
        form,
    })
}
