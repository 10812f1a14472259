//! Inputs shared by the benchmarks in `benches/`.

use nalgebra::{DMatrix, DVector};

/// A deterministic, roughly standard normal looking vector.
pub fn wavy_vector(n: usize, shift: f64) -> DVector<f64> {
    DVector::from_fn(n, |i, _| ((i as f64 + 1.0) * 1.618).sin() * 1.7 + shift)
}

/// `n` drifter positions on straight tracks, six fixes each.
pub fn drifter_coords(drifters: usize) -> Vec<[f64; 3]> {
    let mut coords = Vec::with_capacity(drifters * 6);
    for d in 0..drifters {
        let x0 = (d as f64 * 3.7) % 20.0;
        let y0 = (d as f64 * 5.3) % 20.0;
        let (vx, vy) = ((d as f64).sin() * 0.5, (d as f64).cos() * 0.5);
        for k in 0..6 {
            let t = 3.0 * k as f64;
            coords.push([x0 + vx * t, y0 + vy * t, t]);
        }
    }
    coords
}

/// A diagonal positive-definite covariance with spread-out entries.
pub fn diagonal_covariance(n: usize) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| 0.5 + (i % 7) as f64 * 0.25))
}
