//! Training objectives: the two-way fuzzy divergence between input and
//! latent similarities, the isometry and push-away distance losses, their
//! encoder/autoencoder composites, and the ν/μ continuation schedules.

mod schedule;

pub use schedule::Schedule;

use std::fmt;
use std::str::FromStr;

use crate::graph::{clamp_similarity, solve_sigma_with, Kernel, SimilaritySet, CLAMP_EPS};
use crate::numerics::{pairwise_sq_distances, Matrix};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossMode {
    /// Two-way divergence between fuzzy similarity sets.
    Lgp,
    /// Isometry on input neighbours plus a push-away term.
    Lis,
}

impl fmt::Display for LossMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossMode::Lgp => "lgp",
            LossMode::Lis => "lis",
        })
    }
}

impl FromStr for LossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "lgp" => Ok(LossMode::Lgp),
            "lis" => Ok(LossMode::Lis),
            _ => Err(Error::InvalidArgument(format!("unknown loss mode {s:?} (expected lgp or lis)"))),
        }
    }
}

/// Distance below which non-neighbours are pushed apart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PushThreshold {
    /// Median latent pairwise distance of the current batch.
    Median,
    Fixed(f64),
}

impl fmt::Display for PushThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PushThreshold::Median => f.write_str("median"),
            PushThreshold::Fixed(b) => write!(f, "{b:?}"),
        }
    }
}

impl FromStr for PushThreshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s.eq_ignore_ascii_case("median") {
            return Ok(PushThreshold::Median);
        }
        match s.parse::<f64>() {
            Ok(b) if b > 0.0 && b.is_finite() => Ok(PushThreshold::Fixed(b)),
            _ => Err(Error::InvalidArgument(format!("push threshold must be 'median' or a positive number, got {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossConfig {
    pub mode: LossMode,
    pub alpha: f64,
    pub beta: f64,
    pub mu0: f64,
    pub push_threshold: PushThreshold,
    pub nu_start: f64,
    pub nu_end: f64,
    pub q: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            mode: LossMode::Lgp,
            alpha: 1.0,
            beta: 1.0,
            mu0: 1.0,
            push_threshold: PushThreshold::Median,
            nu_start: 0.001,
            nu_end: 100.0,
            q: 40.0,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |what: &str, v: f64| Err(Error::InvalidArgument(format!("{what} must be nonnegative, got {v}")));
        if !(self.alpha >= 0.0) {
            return bad("alpha", self.alpha);
        }
        if !(self.beta >= 0.0) {
            return bad("beta", self.beta);
        }
        if !(self.mu0 >= 0.0) {
            return bad("mu0", self.mu0);
        }
        if !(self.q > 1.0) {
            return Err(Error::InvalidArgument(format!("q must exceed 1, got {}", self.q)));
        }
        if !(self.nu_start > 0.0 && self.nu_end > 0.0) {
            return Err(Error::InvalidArgument("nu_start and nu_end must be positive".into()));
        }
        Ok(())
    }

    pub fn schedule(&self, epochs: usize) -> Result<Schedule, Error> {
        Schedule::new(epochs, self.nu_start, self.nu_end, self.mu0)
    }
}

#[inline]
fn pair_divergence(u: f64, v: f64) -> f64 {
    u * (u / v).ln() + (1.0 - u) * ((1.0 - u) / (1.0 - v)).ln()
}

#[inline]
fn pair_divergence_slope(u: f64, v: f64) -> f64 {
    -u / v + (1.0 - u) / (1.0 - v)
}

/// Two-way divergence summed over ordered pairs `i ≠ j`, with the gradient
/// with respect to each latent entry.
pub fn loss_lgp(u_in: &SimilaritySet, u_lat: &SimilaritySet) -> Result<(f64, Matrix), Error> {
    let n = u_in.len();
    if u_lat.len() != n {
        return Err(Error::Shape(format!("similarity sets of size {n} and {}", u_lat.len())));
    }
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (u, v) = (u_in.get(i, j), u_lat.get(i, j));
            loss += pair_divergence(u, v);
            grad[(i, j)] = pair_divergence_slope(u, v);
        }
    }
    Ok((loss, grad))
}

/// `Σ_i Σ_{j∈N_i} |d_ij − d′_ij|` over masked ordered pairs (raw distances).
pub fn loss_iso(d_in: &Matrix, d_lat: &Matrix, neighbors: &[Vec<usize>]) -> Result<f64, Error> {
    if d_in.shape() != d_lat.shape() || neighbors.len() != d_in.rows() {
        return Err(Error::Shape("distance matrices and neighbour mask disagree".into()));
    }
    let mut s = 0.0;
    for (i, nb) in neighbors.iter().enumerate() {
        for &j in nb {
            s += (d_in[(i, j)] - d_lat[(i, j)]).abs();
        }
    }
    Ok(s)
}

/// `−Σ d′_ij` over ordered non-neighbour pairs with `d′_ij < B`.
pub fn loss_push(d_lat: &Matrix, neighbors: &[Vec<usize>], b: f64) -> Result<f64, Error> {
    if !(b > 0.0) {
        return Err(Error::InvalidArgument(format!("push threshold must be positive, got {b}")));
    }
    let n = d_lat.rows();
    if neighbors.len() != n {
        return Err(Error::Shape("neighbour mask does not match the batch".into()));
    }
    let mut s = 0.0;
    let mut is_nb = vec![false; n];
    for (i, nb) in neighbors.iter().enumerate() {
        for &j in nb {
            is_nb[j] = true;
        }
        for j in 0..n {
            if j != i && !is_nb[j] && d_lat[(i, j)] < b {
                s -= d_lat[(i, j)];
            }
        }
        for &j in nb {
            is_nb[j] = false;
        }
    }
    Ok(s)
}

/// Median of the strictly-upper-triangular entries.
pub fn median_pair_distance(d: &Matrix) -> f64 {
    let n = d.rows();
    let mut v: Vec<f64> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).map(|(i, j)| d[(i, j)]).collect();
    if v.is_empty() {
        return 0.0;
    }
    let mid = v.len() / 2;
    v.select_nth_unstable_by(mid, f64::total_cmp);
    let hi = v[mid];
    if v.len() % 2 == 1 {
        hi
    } else {
        let lo = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// What the latent batch is compared against.
#[derive(Clone, Debug)]
pub enum BatchTargets {
    /// Input similarities restricted to the batch.
    Lgp(SimilaritySet),
    /// Per batch row, the batch-local input neighbours with their raw input distance.
    Lis(Vec<Vec<(usize, f64)>>),
}

/// How latent scales are obtained for the LGP loss.
#[derive(Clone, Copy, Debug)]
pub enum LatentSigma<'a> {
    /// Solve each row's scale, optionally warm-started from previous values.
    Solve(Option<&'a [f64]>),
    /// Use these scales as given.
    Fixed(&'a [f64]),
}

/// Encoder loss value and `∂L/∂Z` for one batch.
#[derive(Clone, Debug)]
pub struct EncoderLoss {
    pub loss: f64,
    pub grad: Matrix,
    /// Latent scales used (empty in LIS mode).
    pub sigma: Vec<f64>,
    pub sigma_converged: Vec<bool>,
    pub sigma_residual: Vec<f64>,
    /// Push threshold used (LIS mode).
    pub push_threshold: Option<f64>,
    pub kernel_evaluations: u64,
}

impl EncoderLoss {
    fn zero(n: usize, d: usize) -> Self {
        Self {
            loss: 0.0,
            grad: Matrix::zeros(n, d),
            sigma: Vec::new(),
            sigma_converged: Vec::new(),
            sigma_residual: Vec::new(),
            push_threshold: None,
            kernel_evaluations: 0,
        }
    }
}

/// Encoder objective on latent batch `z` at latent shape `nu` and push weight `mu`.
pub fn loss_encoder(
    z: &Matrix,
    targets: &BatchTargets,
    cfg: &LossConfig,
    nu: f64,
    mu: f64,
    sigma: LatentSigma<'_>,
) -> Result<EncoderLoss, Error> {
    let n = z.rows();
    if n < 2 {
        return Ok(EncoderLoss::zero(n, z.cols()));
    }
    let mut out = match targets {
        BatchTargets::Lgp(u_in) => lgp_latent(z, u_in, cfg.q, nu, sigma)?,
        BatchTargets::Lis(nb) => lis_latent(z, nb, mu, cfg.push_threshold)?,
    };
    out.loss *= cfg.alpha;
    for g in out.grad.as_mut_slice() {
        *g *= cfg.alpha;
    }
    Ok(out)
}

fn lgp_latent(z: &Matrix, u_in: &SimilaritySet, q: f64, nu: f64, sigma: LatentSigma<'_>) -> Result<EncoderLoss, Error> {
    let n = z.rows();
    if u_in.len() != n {
        return Err(Error::Shape(format!("{} input similarities for a batch of {n}", u_in.len())));
    }
    let kernel = Kernel::new(nu)?;
    let d = pairwise_sq_distances(z);
    let mut evals = 0u64;

    let mut sig = Vec::with_capacity(n);
    let mut conv = Vec::with_capacity(n);
    let mut resid = Vec::with_capacity(n);
    match sigma {
        LatentSigma::Fixed(s) => {
            if s.len() != n {
                return Err(Error::Shape(format!("{} fixed scales for a batch of {n}", s.len())));
            }
            sig.extend_from_slice(s);
        }
        LatentSigma::Solve(warm) => {
            if let Some(w) = warm {
                if w.len() != n {
                    return Err(Error::Shape(format!("{} warm-start scales for a batch of {n}", w.len())));
                }
            }
            let mut row = Vec::with_capacity(n - 1);
            for i in 0..n {
                row.clear();
                row.extend((0..n).filter(|&j| j != i).map(|j| d[(i, j)]));
                let sol = solve_sigma_with(&kernel, &row, q, warm.map(|w| w[i]))?;
                evals += sol.evaluations;
                sig.push(sol.sigma);
                conv.push(sol.converged);
                resid.push(sol.residual);
            }
        }
    }

    // directional a_ij = u_{j|i} and its slope in d²
    let mut a = Matrix::zeros(n, n);
    let mut slope = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let (u, s) = kernel.eval_with_slope(d[(i, j)], sig[i]);
                a[(i, j)] = u;
                slope[(i, j)] = s;
            }
        }
    }
    evals += (n * (n - 1)) as u64;

    let mut loss = 0.0;
    // p[(i,j)] = ∂L/∂d²_ij for the unordered pair, stored symmetric
    let mut p = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let (aij, aji) = (a[(i, j)], a[(j, i)]);
            let raw = aij + aji - aij * aji;
            let v = clamp_similarity(raw);
            let u = u_in.get(i, j);
            loss += 2.0 * pair_divergence(u, v);
            if raw > CLAMP_EPS && raw < 1.0 - CLAMP_EPS {
                let g = 2.0 * pair_divergence_slope(u, v);
                let pij = g * ((1.0 - aji) * slope[(i, j)] + (1.0 - aij) * slope[(j, i)]);
                p[(i, j)] = pij;
                p[(j, i)] = pij;
            }
        }
    }

    let grad = distance_chain(z, &p, 2.0);
    Ok(EncoderLoss {
        loss,
        grad,
        sigma: sig,
        sigma_converged: conv,
        sigma_residual: resid,
        push_threshold: None,
        kernel_evaluations: evals,
    })
}

/// `∂L/∂z_i = scale·Σ_j c_ij (z_i − z_j)` for a symmetric coefficient matrix.
fn distance_chain(z: &Matrix, c: &Matrix, scale: f64) -> Matrix {
    let (n, dim) = z.shape();
    let mut grad = Matrix::zeros(n, dim);
    for i in 0..n {
        for j in (i + 1)..n {
            let cij = c[(i, j)];
            if cij == 0.0 {
                continue;
            }
            let f = scale * cij;
            for k in 0..dim {
                let t = f * (z[(i, k)] - z[(j, k)]);
                grad[(i, k)] += t;
                grad[(j, k)] -= t;
            }
        }
    }
    grad
}

fn lis_latent(z: &Matrix, nb: &[Vec<(usize, f64)>], mu: f64, threshold: PushThreshold) -> Result<EncoderLoss, Error> {
    let (n, dim) = z.shape();
    if nb.len() != n {
        return Err(Error::Shape(format!("{} neighbour lists for a batch of {n}", nb.len())));
    }
    let d_sq = pairwise_sq_distances(z);
    let d = Matrix::from_vec(n, n, d_sq.as_slice().iter().map(|v| v.sqrt()).collect())?;
    let b = match threshold {
        PushThreshold::Median => median_pair_distance(&d),
        PushThreshold::Fixed(b) => b,
    };

    // coefficient on (z_i − z_j)/d′ per ordered pair, folded into a symmetric matrix
    let mut coef = Matrix::zeros(n, n);
    let mut loss = 0.0;
    let mut is_nb = vec![false; n];
    for (i, row) in nb.iter().enumerate() {
        for &(j, din) in row {
            if j >= n || j == i {
                return Err(Error::Shape(format!("neighbour index {j} invalid for row {i}")));
            }
            is_nb[j] = true;
            let dl = d[(i, j)];
            loss += (din - dl).abs();
            let s = if dl > din {
                1.0
            } else if dl < din {
                -1.0
            } else {
                0.0
            };
            coef[(i, j)] += s;
            coef[(j, i)] += s;
        }
        if mu > 0.0 && b > 0.0 {
            for j in 0..n {
                if j != i && !is_nb[j] && d[(i, j)] < b {
                    loss -= mu * d[(i, j)];
                    coef[(i, j)] -= mu;
                    coef[(j, i)] -= mu;
                }
            }
        }
        for &(j, _) in row {
            is_nb[j] = false;
        }
    }

    let mut grad = Matrix::zeros(n, dim);
    for i in 0..n {
        for j in (i + 1)..n {
            let c = coef[(i, j)];
            let dl = d[(i, j)];
            if c == 0.0 || dl == 0.0 {
                continue;
            }
            let f = c / dl;
            for k in 0..dim {
                let t = f * (z[(i, k)] - z[(j, k)]);
                grad[(i, k)] += t;
                grad[(j, k)] -= t;
            }
        }
    }
    Ok(EncoderLoss {
        loss,
        grad,
        sigma: Vec::new(),
        sigma_converged: Vec::new(),
        sigma_residual: Vec::new(),
        push_threshold: Some(b),
        kernel_evaluations: 0,
    })
}

/// `Σ_i ‖x_i − x̂_i‖²` and its gradient with respect to `x̂`.
pub fn reconstruction_loss(x: &Matrix, x_hat: &Matrix) -> Result<(f64, Matrix), Error> {
    if x.shape() != x_hat.shape() {
        return Err(Error::Shape(format!("reconstruction {:?} vs input {:?}", x_hat.shape(), x.shape())));
    }
    let mut loss = 0.0;
    let grad: Vec<f64> = x
        .as_slice()
        .iter()
        .zip(x_hat.as_slice())
        .map(|(a, b)| {
            let r = b - a;
            loss += r * r;
            2.0 * r
        })
        .collect();
    Ok((loss, Matrix::from_vec(x.rows(), x.cols(), grad)?))
}

/// Autoencoder objective `L_Enc + β·L_Rec`.
#[derive(Clone, Debug)]
pub struct AutoencoderLoss {
    pub total: f64,
    pub encoder: EncoderLoss,
    pub reconstruction: f64,
    /// `∂L/∂X̂`, already scaled by β.
    pub grad_reconstruction: Matrix,
}

pub fn loss_autoencoder(
    x: &Matrix,
    z: &Matrix,
    x_hat: &Matrix,
    targets: &BatchTargets,
    cfg: &LossConfig,
    nu: f64,
    mu: f64,
    sigma: LatentSigma<'_>,
) -> Result<AutoencoderLoss, Error> {
    let encoder = loss_encoder(z, targets, cfg, nu, mu, sigma)?;
    let (rec, mut g) = reconstruction_loss(x, x_hat)?;
    for v in g.as_mut_slice() {
        *v *= cfg.beta;
    }
    Ok(AutoencoderLoss {
        total: encoder.loss + cfg.beta * rec,
        encoder,
        reconstruction: rec,
        grad_reconstruction: g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::symmetrize;
    use crate::numerics::{finite_diff_gradient, max_relative_error, random_rotation, SeededRng};
    use proptest::prelude::*;

    fn set_of(n: usize, f: impl Fn(usize, usize) -> f64) -> SimilaritySet {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m[(i, j)] = f(i.min(j), i.max(j));
                }
            }
        }
        SimilaritySet::from_matrix_unchecked(m)
    }

    #[test]
    fn lgp_hand_value() {
        let u = set_of(2, |_, _| 0.8);
        let v = set_of(2, |_, _| 0.2);
        let (l, g) = loss_lgp(&u, &v).unwrap();
        assert!((l - 1.2 * 4f64.ln()).abs() < 1e-12);
        assert!((g[(0, 1)] - (-0.8 / 0.2 + 0.2 / 0.8)).abs() < 1e-12);
        let (l0, _) = loss_lgp(&u, &u).unwrap();
        assert_eq!(l0, 0.0);
        assert!(loss_lgp(&u, &set_of(3, |_, _| 0.5)).is_err());
    }

    proptest! {
        #[test]
        fn lgp_nonnegative(a in 1e-6f64..(1.0 - 1e-6), b in 1e-6f64..(1.0 - 1e-6)) {
            let (l, _) = loss_lgp(&set_of(2, |_, _| a), &set_of(2, |_, _| b)).unwrap();
            prop_assert!(l >= 0.0);
            if a != b {
                prop_assert!(l > 0.0);
            }
        }
    }

    #[test]
    fn iso_and_push_values() {
        let d_in = Matrix::from_rows(&[vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        let d_lat = Matrix::from_rows(&[vec![0.0, 5.0], vec![5.0, 0.0]]).unwrap();
        assert_eq!(loss_iso(&d_in, &d_lat, &[vec![1], vec![]]).unwrap(), 2.0);
        assert_eq!(loss_iso(&d_in, &d_in, &[vec![1], vec![0]]).unwrap(), 0.0);

        let d = Matrix::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap();
        assert_eq!(loss_push(&d, &[vec![], vec![0]], 1.0).unwrap(), -0.5);
        assert_eq!(loss_push(&d, &[vec![], vec![0]], 0.4).unwrap(), 0.0);
        let closer = Matrix::from_rows(&[vec![0.0, 0.3], vec![0.3, 0.0]]).unwrap();
        assert!(loss_push(&closer, &[vec![], vec![0]], 1.0).unwrap() > -0.5);
    }

    #[test]
    fn iso_matches_loop_oracle() {
        let mut rng = SeededRng::new(9);
        let n = 12;
        let a = Matrix::from_vec(n, 3, (0..n * 3).map(|_| rng.normal()).collect()).unwrap();
        let b = Matrix::from_vec(n, 2, (0..n * 2).map(|_| rng.normal()).collect()).unwrap();
        let sq = |m: &Matrix| Matrix::from_vec(n, n, pairwise_sq_distances(m).into_vec().into_iter().map(f64::sqrt).collect()).unwrap();
        let (da, db) = (sq(&a), sq(&b));
        let nb: Vec<Vec<usize>> = (0..n).map(|i| vec![(i + 1) % n, (i + 3) % n]).collect();
        let mut want = 0.0;
        for i in 0..n {
            for &j in &nb[i] {
                let x: f64 = (0..3).map(|k| (a[(i, k)] - a[(j, k)]).powi(2)).sum::<f64>().sqrt();
                let y: f64 = (0..2).map(|k| (b[(i, k)] - b[(j, k)]).powi(2)).sum::<f64>().sqrt();
                want += (x - y).abs();
            }
        }
        assert!((loss_iso(&da, &db, &nb).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn median() {
        let d = Matrix::from_rows(&[vec![0.0, 1.0, 4.0], vec![1.0, 0.0, 2.0], vec![4.0, 2.0, 0.0]]).unwrap();
        assert_eq!(median_pair_distance(&d), 2.0);
        let d = Matrix::from_rows(&[
            vec![0.0, 1.0, 4.0, 3.0],
            vec![1.0, 0.0, 2.0, 5.0],
            vec![4.0, 2.0, 0.0, 6.0],
            vec![3.0, 5.0, 6.0, 0.0],
        ])
        .unwrap();
        assert_eq!(median_pair_distance(&d), 3.5);
    }

    fn random_lgp_instance(seed: u64, n: usize) -> (Matrix, SimilaritySet) {
        let mut rng = SeededRng::new(seed);
        let z = Matrix::from_vec(n, 2, (0..n * 2).map(|_| rng.normal()).collect()).unwrap();
        let mut c = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    c[(i, j)] = rng.uniform_in(0.01, 0.9);
                }
            }
        }
        (z, symmetrize(&c).unwrap())
    }

    #[test]
    fn lgp_latent_gradient_matches_finite_differences() {
        let cfg = LossConfig { q: 4.0, ..LossConfig::default() };
        for (seed, nu) in [(1, 0.5), (2, 5.0), (3, 100.0)] {
            let (z, u) = random_lgp_instance(seed, 10);
            let t = BatchTargets::Lgp(u);
            let base = loss_encoder(&z, &t, &cfg, nu, 0.0, LatentSigma::Solve(None)).unwrap();
            assert!(base.sigma_converged.iter().all(|&c| c));
            let sig = base.sigma.clone();
            let fd = finite_diff_gradient(
                |p| {
                    let zz = Matrix::from_vec(10, 2, p.to_vec()).unwrap();
                    loss_encoder(&zz, &t, &cfg, nu, 0.0, LatentSigma::Fixed(&sig)).unwrap().loss
                },
                z.as_slice(),
                1e-6,
            )
            .unwrap();
            let err = max_relative_error(base.grad.as_slice(), &fd, 1e-6);
            assert!(err < 1e-4, "ν={nu} err={err}");
        }
    }

    #[test]
    fn lis_gradient_matches_finite_differences() {
        let mut rng = SeededRng::new(4);
        let n = 10;
        let z = Matrix::from_vec(n, 2, (0..n * 2).map(|_| rng.normal()).collect()).unwrap();
        let nb: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| vec![((i + 1) % n, rng.uniform_in(0.5, 2.0)), ((i + 4) % n, rng.uniform_in(0.5, 2.0))])
            .collect();
        let t = BatchTargets::Lis(nb);
        let cfg = LossConfig {
            mode: LossMode::Lis,
            alpha: 0.7,
            push_threshold: PushThreshold::Fixed(1.5),
            ..LossConfig::default()
        };
        let base = loss_encoder(&z, &t, &cfg, 1.0, 0.8, LatentSigma::Solve(None)).unwrap();
        let fd = finite_diff_gradient(
            |p| {
                let zz = Matrix::from_vec(n, 2, p.to_vec()).unwrap();
                loss_encoder(&zz, &t, &cfg, 1.0, 0.8, LatentSigma::Solve(None)).unwrap().loss
            },
            z.as_slice(),
            1e-6,
        )
        .unwrap();
        assert!(max_relative_error(base.grad.as_slice(), &fd, 1e-6) < 1e-4);
    }

    #[test]
    fn isometry_gives_zero_iso_loss() {
        let mut rng = SeededRng::new(5);
        let n = 15;
        let x = Matrix::from_vec(n, 2, (0..n * 2).map(|_| rng.normal()).collect()).unwrap();
        let z = x.matmul(&random_rotation(2, &mut rng)).unwrap();
        let nb: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                let j = (i + 2) % n;
                let d = (0..2).map(|k| (x[(i, k)] - x[(j, k)]).powi(2)).sum::<f64>().sqrt();
                vec![(j, d)]
            })
            .collect();
        let cfg = LossConfig { mode: LossMode::Lis, ..LossConfig::default() };
        let l = loss_encoder(&z, &BatchTargets::Lis(nb), &cfg, 1.0, 0.0, LatentSigma::Solve(None)).unwrap();
        assert!(l.loss.abs() < 1e-12);
    }

    #[test]
    fn degenerate_batch() {
        let z = Matrix::zeros(1, 2);
        let t = BatchTargets::Lgp(set_of(1, |_, _| 0.5));
        let l = loss_encoder(&z, &t, &LossConfig::default(), 1.0, 0.0, LatentSigma::Solve(None)).unwrap();
        assert_eq!(l.loss, 0.0);
        assert!(l.grad.as_slice().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn relabeling_invariance() {
        let (z, u) = random_lgp_instance(6, 8);
        let cfg = LossConfig { q: 3.0, ..LossConfig::default() };
        let l = loss_encoder(&z, &BatchTargets::Lgp(u.clone()), &cfg, 2.0, 0.0, LatentSigma::Solve(None)).unwrap();
        let perm = [3usize, 0, 7, 5, 1, 6, 2, 4];
        let zp = z.select_rows(&perm);
        let up = u.restrict(&perm);
        let lp = loss_encoder(&zp, &BatchTargets::Lgp(up), &cfg, 2.0, 0.0, LatentSigma::Solve(None)).unwrap();
        assert!((l.loss - lp.loss).abs() < 1e-9 * l.loss.abs());
    }

    #[test]
    fn reconstruction_values() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let y = Matrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        assert_eq!(reconstruction_loss(&x, &y).unwrap().0, 2.0);
        assert_eq!(reconstruction_loss(&x, &x).unwrap().0, 0.0);
        let (z, u) = random_lgp_instance(7, 6);
        let t = BatchTargets::Lgp(u);
        let cfg = LossConfig { beta: 0.0, q: 3.0, ..LossConfig::default() };
        let xs = Matrix::from_vec(6, 2, vec![0.3; 12]).unwrap();
        let ae = loss_autoencoder(&xs, &z, &z, &t, &cfg, 1.0, 0.0, LatentSigma::Solve(None)).unwrap();
        let enc = loss_encoder(&z, &t, &cfg, 1.0, 0.0, LatentSigma::Solve(None)).unwrap();
        assert_eq!(ae.total, enc.loss);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("LIS".parse::<LossMode>().unwrap(), LossMode::Lis);
        assert!("foo".parse::<LossMode>().is_err());
        assert_eq!("median".parse::<PushThreshold>().unwrap(), PushThreshold::Median);
        assert_eq!("2.5".parse::<PushThreshold>().unwrap(), PushThreshold::Fixed(2.5));
        assert!("-1".parse::<PushThreshold>().is_err());
    }
}
