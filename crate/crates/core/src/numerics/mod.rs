//! Dense matrices, seeded randomness, special functions and gradient
//! checking shared by the rest of the crate.

mod matrix;
pub mod pca;
mod rng;
mod special;

pub use matrix::{pairwise_sq_distances, sq_dist, Matrix};
pub use rng::{RngState, SeededRng};
pub use special::log_gamma;

use crate::Error;

/// Central-difference gradient of `f` at `p` with step `h`.
pub fn finite_diff_gradient<F>(mut f: F, p: &[f64], h: f64) -> Result<Vec<f64>, Error>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let mut x = p.to_vec();
    let mut grad = Vec::with_capacity(p.len());
    for k in 0..p.len() {
        let orig = x[k];
        x[k] = orig + h;
        let up = f(&x);
        x[k] = orig - h;
        let down = f(&x);
        x[k] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite(format!(
                "objective evaluated to {up} / {down} around coordinate {k}"
            )));
        }
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Haar-ish random orthonormal matrix from Gram–Schmidt on Gaussian columns.
pub fn random_rotation(dim: usize, rng: &mut SeededRng) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
        for c in &cols {
            let dot: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            for (vi, ci) in v.iter_mut().zip(c) {
                *vi -= dot * ci;
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    let mut m = Matrix::zeros(dim, dim);
    for (j, c) in cols.iter().enumerate() {
        for (i, v) in c.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    m
}

/// Max over coordinates of |a−b| / max(|a|, |b|, floor).
pub fn max_relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}
