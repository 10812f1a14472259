//! Reference implementations used as test oracles, plus the seeded cases
//! that compare them with the library. The oracles are generic and share no
//! code with the library.

#![allow(dead_code)]

use cvalue_core::estimators::{
    fay_herriot_mean, gp_posterior_mean, hier_regression_posterior, kernel_matrix, lindley_smith, morris_shrinkage,
    two_source_posterior, two_source_spatial_posterior, AffineEstimate, GpKernel, GpKernelKind, SqExpKernel,
};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

/// `F Fᵀ + shift·I` for a Gaussian factor `F`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> DMatrix<f64> {
    let f = normal_matrix(rng, n, n);
    &f * f.transpose() + DMatrix::identity(n, n) * shift
}

fn inv(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().try_inverse().expect("oracle matrix is invertible")
}

/// Posterior mean of `x ~ N(m, P)` given `y = Hx + b + e`, `e ~ N(0, R)`.
pub fn posterior_mean_cov(
    m: &DVector<f64>,
    p: &DMatrix<f64>,
    h: &DMatrix<f64>,
    b: &DVector<f64>,
    r: &DMatrix<f64>,
    y: &DVector<f64>,
) -> DVector<f64> {
    let s = h * p * h.transpose() + r;
    m + p * h.transpose() * inv(&s) * (y - h * m - b)
}

/// Posterior mean in information form: prior density `∝ exp(−½ xᵀQx)`
/// (possibly improper, `Q` singular) and `y = Hx + e`, `e ~ N(0, R)`.
pub fn posterior_mean_info(q: &DMatrix<f64>, h: &DMatrix<f64>, r: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let r_inv = inv(r);
    let precision = q + h.transpose() * &r_inv * h;
    inv(&precision) * (h.transpose() * r_inv * y)
}

/// Stacks blocks `[[a, b], [c, d]]`.
pub fn block2(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    let (r1, c1) = a.shape();
    let (r2, c2) = d.shape();
    let mut out = DMatrix::zeros(r1 + r2, c1 + c2);
    out.view_mut((0, 0), (r1, c1)).copy_from(a);
    out.view_mut((0, c1), (r1, c2)).copy_from(b);
    out.view_mut((r1, 0), (r2, c1)).copy_from(c);
    out.view_mut((r1, c1), (r2, c2)).copy_from(d);
    out
}

pub fn block_diag(a: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    block2(
        a,
        &DMatrix::zeros(a.nrows(), d.ncols()),
        &DMatrix::zeros(d.nrows(), a.ncols()),
        d,
    )
}

pub fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// Precision of `(u, v)` under `u − v ~ N(0, V)` and nothing else:
/// `[[V⁻¹, −V⁻¹], [−V⁻¹, V⁻¹]]`.
pub fn difference_precision(v: &DMatrix<f64>) -> DMatrix<f64> {
    let vi = inv(v);
    block2(&vi, &(-&vi), &(-&vi), &vi)
}

/// `sup{x ≥ 0 : x − |η|√(ρ + νx) ≤ γ}` (0 when the set is empty), by
/// golden-section location of the minimum of the convex left side followed
/// by bisection on its increasing branch.
pub fn u_bisection(gamma: f64, eta: f64, rho: f64, nu: f64) -> f64 {
    let g = |x: f64| x - eta.abs() * (rho + nu * x).sqrt() - gamma;
    let mut hi = 1.0 + gamma.abs() + eta * eta * nu + eta.abs() * rho.sqrt();
    while g(hi) <= 0.0 {
        hi *= 2.0;
    }
    let (mut a, mut b) = (0.0, hi);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..300 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if g(c) < g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let xmin = 0.5 * (a + b);
    let xmin = if g(0.0) <= g(xmin) { 0.0 } else { xmin };
    if g(xmin) > 0.0 {
        return 0.0;
    }
    let (mut lo, mut up) = (xmin, hi);
    for _ in 0..400 {
        let mid = 0.5 * (lo + up);
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            up = mid;
        }
        if up - lo <= 1e-15 * up.max(1.0) {
            break;
        }
    }
    lo
}

/// Three-standard-error lower band for a coverage estimate at level `alpha`.
pub fn nominal_band(alpha: f64, n: usize) -> f64 {
    alpha - 3.0 * (alpha * (1.0 - alpha) / n as f64).sqrt()
}

/// One estimator evaluated by the library and by a conditioning oracle.
pub struct ConjugacyCase {
    pub name: &'static str,
    pub library: AffineEstimate,
    pub oracle: DVector<f64>,
    /// The input the affine form should be applied to.
    pub input: DVector<f64>,
}

impl ConjugacyCase {
    pub fn error(&self) -> f64 {
        (&self.library.estimate - &self.oracle).amax()
    }

    pub fn affine_error(&self) -> f64 {
        (self.library.form.apply(&self.input).unwrap() - &self.library.estimate).amax()
    }
}

pub fn gp_test_kernel() -> GpKernel {
    GpKernel {
        mesoscale: SqExpKernel {
            variance: 1.0,
            length_scales: [10.0, 10.0, 24.0],
        },
        submesoscale: SqExpKernel {
            variance: 0.7,
            length_scales: [3.0, 3.0, 9.0],
        },
        kind: GpKernelKind::MultiScale,
    }
}

/// Seeded instances of every conjugacy-based estimator.
pub fn conjugacy_cases(seed: u64) -> Vec<ConjugacyCase> {
    let mut r = rng(seed);
    let mut cases = Vec::new();
    let n = 12;

    // θ = Xβ + u, u ~ N(0, τ²I), β flat, y = θ + e. State (β, θ).
    let shrinkage_oracle = |y: &DVector<f64>, x: &DMatrix<f64>, tau: f64| {
        let d = x.ncols();
        let t2 = tau * tau;
        let q = block2(
            &(x.transpose() * x / t2),
            &(-x.transpose() / t2),
            &(-x / t2),
            &(DMatrix::identity(n, n) / t2),
        );
        let h = block2(
            &DMatrix::zeros(0, d),
            &DMatrix::zeros(0, n),
            &DMatrix::zeros(n, d),
            &DMatrix::identity(n, n),
        );
        let state = posterior_mean_info(&q, &h, &DMatrix::identity(n, n), y);
        state.rows(d, n).into_owned()
    };

    let y = normal_vector(&mut r, n) * 2.0;
    let ones = DMatrix::from_element(n, 1, 1.0);
    cases.push(ConjugacyCase {
        name: "lindley_smith",
        library: lindley_smith(&y, 0.8).unwrap(),
        oracle: shrinkage_oracle(&y, &ones, 0.8),
        input: y.clone(),
    });

    let x = normal_matrix(&mut r, n, 3);
    cases.push(ConjugacyCase {
        name: "morris",
        library: morris_shrinkage(&y, &x, 1.3).unwrap(),
        oracle: shrinkage_oracle(&y, &x, 1.3),
        input: y.clone(),
    });

    let beta = normal_vector(&mut r, 3);
    let noise = DVector::from_fn(n, |i, _| 0.2 + 0.15 * i as f64);
    let tau = 0.9;
    cases.push(ConjugacyCase {
        name: "fay_herriot",
        library: fay_herriot_mean(&y, &x, &beta, tau, &noise).unwrap(),
        oracle: posterior_mean_cov(
            &(&x * &beta),
            &(DMatrix::identity(n, n) * (tau * tau)),
            &DMatrix::identity(n, n),
            &DVector::zeros(n),
            &DMatrix::from_diagonal(&noise),
            &y,
        ),
        input: y.clone(),
    });

    // θ flat, η − θ ~ N(0, 2K + 2σ_δ²I), y = θ + e_y, z = η + e_z.
    let z = normal_vector(&mut r, n);
    let (sy, sz, sd) = (0.7, 1.1, 0.4);
    let pooled_oracle = |k: &DMatrix<f64>| {
        let v = k * 2.0 + DMatrix::identity(n, n) * (2.0 * sd * sd);
        let q = difference_precision(&v);
        let h = DMatrix::identity(2 * n, 2 * n);
        let r = block_diag(
            &(DMatrix::identity(n, n) * (sy * sy)),
            &(DMatrix::identity(n, n) * (sz * sz)),
        );
        posterior_mean_info(&q, &h, &r, &stack(&y, &z)).rows(0, n).into_owned()
    };
    cases.push(ConjugacyCase {
        name: "two_source",
        library: two_source_posterior(&y, &z, sy, sz, sd).unwrap(),
        oracle: pooled_oracle(&DMatrix::zeros(n, n)),
        input: y.clone(),
    });
    let kern = random_spd(&mut r, n, 0.1) * 0.3;
    cases.push(ConjugacyCase {
        name: "two_source_spatial",
        library: two_source_spatial_posterior(&y, &z, sy, sz, sd, &kern).unwrap(),
        oracle: pooled_oracle(&kern),
        input: y.clone(),
    });

    // θ ~ N(0, K + jitter), y = θ + e.
    let coords: Vec<[f64; 3]> = (0..n)
        .map(|i| [i as f64 * 1.7, (i as f64 * 0.9).cos() * 5.0, (i % 4) as f64 * 3.0])
        .collect();
    let kernel = gp_test_kernel();
    let sigma_eps = 0.3;
    for kind in [GpKernelKind::MultiScale, GpKernelKind::MesoscalePlusNugget] {
        let kk = kernel.with_kind(kind);
        let k = kernel_matrix(&coords, &kk).unwrap();
        let kj = &k + DMatrix::identity(n, n) * (1e-8 * k.trace() / n as f64);
        cases.push(ConjugacyCase {
            name: match kind {
                GpKernelKind::MultiScale => "gp_multi_scale",
                GpKernelKind::MesoscalePlusNugget => "gp_nugget",
            },
            library: gp_posterior_mean(&coords, &y, &kk, sigma_eps).unwrap(),
            oracle: posterior_mean_cov(
                &DVector::zeros(n),
                &kj,
                &DMatrix::identity(n, n),
                &DVector::zeros(n),
                &(DMatrix::identity(n, n) * (sigma_eps * sigma_eps)),
                &y,
            ),
            input: y.clone(),
        });
    }

    // State (β, η): β − η ~ N(0, 2σ_β² I), η flat, Ȳ = X̄β + e, Z = Wη + e.
    let d = 3;
    let xb = normal_matrix(&mut r, 20, d);
    let yb = normal_vector(&mut r, 20);
    let w = normal_matrix(&mut r, 25, d);
    let zz = normal_vector(&mut r, 25);
    let xt = normal_matrix(&mut r, 7, d);
    let sb = 0.6;
    let h = hier_regression_posterior(&xb, &yb, &w, &zz, &xt, sb).unwrap();
    let q = difference_precision(&(DMatrix::identity(d, d) * (2.0 * sb * sb)));
    let obs = block_diag(&xb, &w);
    let state = posterior_mean_info(&q, &obs, &DMatrix::identity(45, 45), &stack(&yb, &zz));
    cases.push(ConjugacyCase {
        name: "hier_regression",
        library: AffineEstimate {
            estimate: h.estimate.clone(),
            form: h.form.clone(),
        },
        oracle: &xt * state.rows(0, d),
        input: h.mle.clone(),
    });
    cases
}
