//! Principal component projection by power iteration with deflation.

use super::{Matrix, SeededRng};
use crate::Error;

const MAX_ITERS: usize = 20_000;
const TOL: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit eigenvectors of the covariance, one per column, by decreasing eigenvalue.
    pub components: Matrix,
    pub eigenvalues: Vec<f64>,
}

impl Pca {
    pub fn fit(x: &Matrix, n_components: usize) -> Result<Self, Error> {
        let (m, d) = x.shape();
        if m < 2 {
            return Err(Error::InvalidArgument("PCA needs at least two rows".into()));
        }
        if n_components == 0 || n_components > d {
            return Err(Error::InvalidArgument(format!(
                "cannot extract {n_components} components from {d} columns"
            )));
        }
        let mean = x.column_means();
        let mut centered = x.clone();
        for i in 0..m {
            for (v, mu) in centered.row_mut(i).iter_mut().zip(&mean) {
                *v -= mu;
            }
        }
        let mut cov = centered.t_matmul(&centered)?.scale(1.0 / (m - 1) as f64);
        let mut rng = SeededRng::new(0x5eed_9ca);
        let mut components = Matrix::zeros(d, n_components);
        let mut eigenvalues = Vec::with_capacity(n_components);
        for c in 0..n_components {
            let (lambda, v) = dominant_eigenpair(&cov, &mut rng);
            for i in 0..d {
                components[(i, c)] = v[i];
                for j in 0..d {
                    cov[(i, j)] -= lambda * v[i] * v[j];
                }
            }
            eigenvalues.push(lambda);
        }
        Ok(Self {
            mean,
            components,
            eigenvalues,
        })
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix, Error> {
        if x.cols() != self.mean.len() {
            return Err(Error::Shape(format!(
                "PCA fitted on {} columns, got {}",
                self.mean.len(),
                x.cols()
            )));
        }
        let mut centered = x.clone();
        for i in 0..x.rows() {
            for (v, mu) in centered.row_mut(i).iter_mut().zip(&self.mean) {
                *v -= mu;
            }
        }
        centered.matmul(&self.components)
    }
}

/// Projects the rows of `x` onto their top two principal axes.
pub fn project_2d(x: &Matrix) -> Result<Matrix, Error> {
    Pca::fit(x, 2)?.transform(x)
}

fn dominant_eigenpair(a: &Matrix, rng: &mut SeededRng) -> (f64, Vec<f64>) {
    let d = a.rows();
    let mut v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
    normalize(&mut v);
    let mut lambda = 0.0;
    for _ in 0..MAX_ITERS {
        let mut w = mat_vec(a, &v);
        let norm = normalize(&mut w);
        if norm == 0.0 {
            return (0.0, v);
        }
        let delta = v
            .iter()
            .zip(&w)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        v = w;
        lambda = rayleigh(a, &v);
        if delta < TOL {
            break;
        }
    }
    // deterministic sign: largest-magnitude entry positive
    let pivot = v
        .iter()
        .copied()
        .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    (lambda, v)
}

fn mat_vec(a: &Matrix, v: &[f64]) -> Vec<f64> {
    a.iter_rows()
        .map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

fn rayleigh(a: &Matrix, v: &[f64]) -> f64 {
    mat_vec(a, v).iter().zip(v).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{pairwise_sq_distances, random_rotation};

    /// Eigenvalues of a symmetric 3×3 matrix via the trigonometric solution
    /// of its characteristic polynomial, descending.
    fn sym3_eigenvalues(a: &Matrix) -> [f64; 3] {
        let p1 = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        let q = (a[(0, 0)] + a[(1, 1)] + a[(2, 2)]) / 3.0;
        let p2 = (a[(0, 0)] - q).powi(2) + (a[(1, 1)] - q).powi(2) + (a[(2, 2)] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let mut b = a.clone();
        for i in 0..3 {
            b[(i, i)] -= q;
        }
        let b = b.scale(1.0 / p);
        let det = b[(0, 0)] * (b[(1, 1)] * b[(2, 2)] - b[(1, 2)] * b[(2, 1)])
            - b[(0, 1)] * (b[(1, 0)] * b[(2, 2)] - b[(1, 2)] * b[(2, 0)])
            + b[(0, 2)] * (b[(1, 0)] * b[(2, 1)] - b[(1, 1)] * b[(2, 0)]);
        let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        [e1, 3.0 * q - e1 - e3, e3]
    }

    /// Null vector of (A − λI) from the cross product of two of its rows.
    fn eigenvector(a: &Matrix, lambda: f64) -> [f64; 3] {
        let r = |i: usize| [a[(i, 0)] - if i == 0 { lambda } else { 0.0 }, a[(i, 1)] - if i == 1 { lambda } else { 0.0 }, a[(i, 2)] - if i == 2 { lambda } else { 0.0 }];
        let cross = |u: [f64; 3], v: [f64; 3]| [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
        let cands = [cross(r(0), r(1)), cross(r(0), r(2)), cross(r(1), r(2))];
        let best = cands
            .iter()
            .max_by(|x, y| {
                let nx: f64 = x.iter().map(|t| t * t).sum();
                let ny: f64 = y.iter().map(|t| t * t).sum();
                nx.partial_cmp(&ny).unwrap()
            })
            .unwrap();
        let n = best.iter().map(|t| t * t).sum::<f64>().sqrt();
        [best[0] / n, best[1] / n, best[2] / n]
    }

    #[test]
    fn power_iteration_matches_characteristic_polynomial() {
        let mut rng = SeededRng::new(21);
        let rot = random_rotation(3, &mut rng);
        let mut x = Matrix::zeros(400, 3);
        for i in 0..400 {
            let raw = [3.0 * rng.normal(), 1.5 * rng.normal(), 0.4 * rng.normal()];
            for j in 0..3 {
                x[(i, j)] = (0..3).map(|k| raw[k] * rot[(j, k)]).sum::<f64>() + 2.0;
            }
        }
        let pca = Pca::fit(&x, 2).unwrap();
        let mean = x.column_means();
        let mut c = x.clone();
        for i in 0..400 {
            for j in 0..3 {
                c[(i, j)] -= mean[j];
            }
        }
        let cov = c.t_matmul(&c).unwrap().scale(1.0 / 399.0);
        let eig = sym3_eigenvalues(&cov);
        for comp in 0..2 {
            assert!((pca.eigenvalues[comp] - eig[comp]).abs() < 1e-8 * eig[0]);
            let want = eigenvector(&cov, eig[comp]);
            let got: Vec<f64> = (0..3).map(|i| pca.components[(i, comp)]).collect();
            let sign = if want.iter().zip(&got).map(|(a, b)| a * b).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
            for i in 0..3 {
                assert!((got[i] - sign * want[i]).abs() < 1e-8, "component {comp}");
            }
        }
    }

    #[test]
    fn projection_of_planar_data_is_rigid() {
        let mut rng = SeededRng::new(2);
        let x = Matrix::from_vec(50, 2, (0..100).map(|_| rng.normal()).collect()).unwrap();
        let p = project_2d(&x).unwrap();
        let (a, b) = (pairwise_sq_distances(&x), pairwise_sq_distances(&p));
        for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let x = Matrix::zeros(5, 2);
        assert!(Pca::fit(&x, 3).is_err());
        assert!(Pca::fit(&Matrix::zeros(1, 2), 1).is_err());
    }
}
