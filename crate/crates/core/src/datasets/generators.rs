use std::f64::consts::PI;

use super::Dataset;
use crate::numerics::{Matrix, SeededRng};
use crate::Error;

/// Swiss roll: `(t cos t, y, t sin t)` with `t ~ U[1.5π, 4.5π]`, `y ~ U[0, 21]`.
///
/// Labels are the decile of `t` over the generated sample.
pub fn gen_swiss_roll(m: usize, noise: f64, rng: &mut SeededRng) -> Result<Dataset, Error> {
    if m < 4 {
        return Err(Error::InvalidArgument(format!("swiss roll needs at least 4 points, got {m}")));
    }
    if !(noise >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise must be nonnegative, got {noise}")));
    }
    let mut features = Matrix::zeros(m, 3);
    let mut ts = Vec::with_capacity(m);
    for i in 0..m {
        let t = rng.uniform_in(1.5 * PI, 4.5 * PI);
        let y = rng.uniform_in(0.0, 21.0);
        let row = features.row_mut(i);
        row[0] = t * t.cos();
        row[1] = y;
        row[2] = t * t.sin();
        if noise > 0.0 {
            for v in row.iter_mut() {
                *v += noise * rng.normal();
            }
        }
        ts.push(t);
    }
    let labels = quantile_buckets(&ts, 10);
    Dataset::new("swissroll", features, Some(labels))
}

/// Generating parameter `t` for each swiss roll row is not retained; this
/// recomputes it from a noiseless sample.
pub fn swiss_roll_parameter(row: &[f64]) -> f64 {
    row[0].hypot(row[2])
}

fn quantile_buckets(values: &[f64], buckets: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut labels = vec![0; values.len()];
    for (rank, &i) in order.iter().enumerate() {
        labels[i] = rank * buckets / values.len();
    }
    labels
}

/// Eye centres of the smile face.
pub const SMILE_EYES: [(f64, f64); 2] = [(-0.35, 0.35), (0.35, 0.35)];
pub const SMILE_EYE_STD: f64 = 0.05;
pub const SMILE_MOUTH_RADIUS: f64 = 0.6;
/// Mouth angles run over `[α, 2π − α]` measured from the upward axis.
pub const SMILE_MOUTH_ALPHA: f64 = 2.0 * PI / 3.0;

/// Smile face: unit outline circle (60%), two Gaussian eyes (10% each),
/// lower mouth arc (20%). Labels 0 outline, 1 left eye, 2 right eye, 3 mouth.
pub fn gen_smile_face(m: usize, rng: &mut SeededRng) -> Result<Dataset, Error> {
    if m < 40 {
        return Err(Error::InvalidArgument(format!("smile face needs at least 40 points, got {m}")));
    }
    let counts = smile_face_counts(m);
    let mut features = Matrix::zeros(m, 2);
    let mut labels = Vec::with_capacity(m);
    let mut i = 0;
    for (part, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            let (x, y) = match part {
                0 => {
                    let a = rng.uniform_in(0.0, 2.0 * PI);
                    (a.cos(), a.sin())
                }
                1 | 2 => {
                    let (cx, cy) = SMILE_EYES[part - 1];
                    (cx + SMILE_EYE_STD * rng.normal(), cy + SMILE_EYE_STD * rng.normal())
                }
                _ => {
                    let a = rng.uniform_in(SMILE_MOUTH_ALPHA, 2.0 * PI - SMILE_MOUTH_ALPHA);
                    (SMILE_MOUTH_RADIUS * a.sin(), SMILE_MOUTH_RADIUS * a.cos())
                }
            };
            features[(i, 0)] = x;
            features[(i, 1)] = y;
            labels.push(part);
            i += 1;
        }
    }
    Dataset::new("smileface", features, Some(labels))
}

/// Part sizes (outline, left eye, right eye, mouth); the mouth absorbs rounding.
pub fn smile_face_counts(m: usize) -> [usize; 4] {
    let outline = (0.6 * m as f64).round() as usize;
    let eye = (0.1 * m as f64).round() as usize;
    [outline, eye, eye, m - outline - 2 * eye]
}

pub const THREE_GAUSS_STDS: [f64; 3] = [1.0, 2.0, 4.0];
pub const THREE_GAUSS_MEAN_NORM: f64 = 20.0;

/// Three isotropic Gaussians with standard deviations 1, 2, 4 centred at
/// `20·e_c` for the first three coordinate axes.
pub fn gen_three_gauss(m: usize, dim: usize, rng: &mut SeededRng) -> Result<Dataset, Error> {
    if m == 0 || m % 3 != 0 {
        return Err(Error::InvalidArgument(format!("three gauss needs a positive multiple of 3 points, got {m}")));
    }
    if dim < 3 {
        return Err(Error::InvalidArgument(format!("three gauss needs at least 3 dimensions, got {dim}")));
    }
    let per = m / 3;
    let mut features = Matrix::zeros(m, dim);
    let mut labels = Vec::with_capacity(m);
    for c in 0..3 {
        for r in 0..per {
            let row = features.row_mut(c * per + r);
            for v in row.iter_mut() {
                *v = THREE_GAUSS_STDS[c] * rng.normal();
            }
            row[c] += THREE_GAUSS_MEAN_NORM;
            labels.push(c);
        }
    }
    Dataset::new("threegauss", features, Some(labels))
}

/// Three random standard-normal locations, each repeated `copies` times.
pub fn gen_repeat_points(copies: usize, dim: usize, rng: &mut SeededRng) -> Result<Dataset, Error> {
    if copies == 0 || dim == 0 {
        return Err(Error::InvalidArgument("repeat points needs copies ≥ 1 and dim ≥ 1".into()));
    }
    let mut features = Matrix::zeros(3 * copies, dim);
    let mut labels = Vec::with_capacity(3 * copies);
    for c in 0..3 {
        let loc: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
        for r in 0..copies {
            features.row_mut(c * copies + r).copy_from_slice(&loc);
            labels.push(c);
        }
    }
    Dataset::new("repeatpoints", features, Some(labels))
}
