//! Gaussian-process posterior means over space-time coordinates
//! `(lat, lon, t)` with squared-exponential kernels.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::AffineEstimate;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{symmetrize, AffineForm};

/// Relative diagonal jitter added to every kernel matrix.
pub const JITTER: f64 = 1e-8;

/// `σ² exp(−½ Σ_i (Δ_i / r_i)²)` over the three coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqExpKernel {
    pub variance: f64,
    pub length_scales: [f64; 3],
}

impl SqExpKernel {
    pub fn eval(&self, a: &[f64; 3], b: &[f64; 3]) -> f64 {
        let mut d2 = 0.0;
        for i in 0..3 {
            let u = (a[i] - b[i]) / self.length_scales[i];
            d2 += u * u;
        }
        self.variance * (-0.5 * d2).exp()
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.variance > 0.0) || !self.variance.is_finite() {
            return Err(Error::invalid(format!("{name} variance must be positive")));
        }
        if self.length_scales.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::invalid(format!("{name} length scales must be positive")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GpKernelKind {
    /// `k₁ + k₂`: mesoscale plus submesoscale squared exponentials.
    MultiScale,
    /// `k₁ + σ₂² 1[x = x']`: the submesoscale term replaced by white noise of
    /// the same marginal variance.
    MesoscalePlusNugget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpKernel {
    pub mesoscale: SqExpKernel,
    pub submesoscale: SqExpKernel,
    pub kind: GpKernelKind,
}

impl GpKernel {
    pub fn with_kind(&self, kind: GpKernelKind) -> Self {
        GpKernel { kind, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        self.mesoscale.validate("mesoscale")?;
        self.submesoscale.validate("submesoscale")
    }
}

/// Prior covariance matrix at the given coordinates (without jitter).
pub fn kernel_matrix(coords: &[[f64; 3]], kernel: &GpKernel) -> Result<DMatrix<f64>> {
    kernel.validate()?;
    let n = coords.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut v = kernel.mesoscale.eval(&coords[i], &coords[j]);
            v += match kernel.kind {
                GpKernelKind::MultiScale => kernel.submesoscale.eval(&coords[i], &coords[j]),
                GpKernelKind::MesoscalePlusNugget if i == j => kernel.submesoscale.variance,
                GpKernelKind::MesoscalePlusNugget => 0.0,
            };
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// `K + JITTER · mean(diag K) · I`.
pub fn jittered(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    let jit = JITTER * k.diagonal().mean();
    k + DMatrix::identity(n, n) * jit
}

/// Posterior mean `K (K + σ_ε² I)⁻¹ y` with its matrix as the affine form.
pub fn gp_posterior_mean(
    coords: &[[f64; 3]],
    y: &DVector<f64>,
    kernel: &GpKernel,
    sigma_eps: f64,
) -> Result<AffineEstimate> {
    check_dim("coordinates", y.len(), coords.len())?;
    let k = kernel_matrix(coords, kernel)?;
    gp_posterior_from_kernel(&k, y, sigma_eps)
}

/// As [`gp_posterior_mean`] for a precomputed prior covariance.
pub fn gp_posterior_from_kernel(k: &DMatrix<f64>, y: &DVector<f64>, sigma_eps: f64) -> Result<AffineEstimate> {
    let n = y.len();
    check_dim("kernel rows", n, k.nrows())?;
    if !(sigma_eps > 0.0) || !sigma_eps.is_finite() {
        return Err(Error::invalid(format!("sigma_eps must be finite and positive, got {sigma_eps}")));
    }
    let kj = jittered(k);
    let noisy = &kj + DMatrix::identity(n, n) * (sigma_eps * sigma_eps);
    let chol = Cholesky::new(symmetrize(&noisy))
        .ok_or_else(|| Error::Singular("GP covariance failed Cholesky after jitter".into()))?;
    let matrix = symmetrize(&chol.solve(&kj));
    let form = AffineForm::linear(matrix)?;
    Ok(AffineEstimate {
        estimate: form.apply(y)?,
        form,
    })
}
