//! Input-space neighbourhood graph and the distance → fuzzy similarity
//! pipeline: nearest-neighbour calibration, squared-t kernel, per-point
//! scale search against a perplexity target, and probabilistic-OR
//! symmetrization.

mod kernel;
mod knn;

pub use kernel::{
    c_nu, calibrate, fuzzy_or, kernel, solve_sigma, solve_sigma_with, symmetrize, Kernel,
    SigmaSolution, SimilaritySet, CLAMP_EPS, SIGMA_MAX, SIGMA_MAX_ITERS, SIGMA_MIN, SIGMA_TOL,
};
pub use knn::{build_knn, knn_from_sq_distances, KnnTable};

pub(crate) use kernel::{calibrate_one, clamp_similarity};

use crate::datasets::Dataset;
use crate::numerics::{pairwise_sq_distances, sq_dist, Matrix};
use crate::Error;

/// Up to this many points the scale search sums over every other point and
/// the symmetrized similarities are cached densely; above it the search
/// uses the k-NN set and similarities are produced per batch.
pub const DENSE_LIMIT: usize = 5000;

/// Neighbour count for the scale search above [`DENSE_LIMIT`].
pub fn sigma_neighbor_count(m: usize, q: f64) -> usize {
    (m - 1).min(15usize.max((3.0 * q).ceil() as usize))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphConfig {
    /// Neighbours per point in the k-NN table.
    pub k: usize,
    /// Perplexity-like target `Q`.
    pub q: f64,
    /// Kernel shape in the input space.
    pub nu_input: f64,
}

/// Input-space k-NN graph with per-point calibration offsets and scales.
#[derive(Clone, Debug)]
pub struct NeighborGraph {
    pub knn: KnnTable,
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
    pub sigma_converged: Vec<bool>,
    /// `Σ_j u_{j|i} − log₂Q` at the solved scale.
    pub sigma_residual: Vec<f64>,
    pub q: f64,
    pub nu_input: f64,
    /// Kernel evaluations spent building the graph.
    pub kernel_evaluations: u64,
}

impl NeighborGraph {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        self.knn.neighbors(i)
    }
}

/// Read-only source of input similarities for any batch of point indices.
#[derive(Clone, Debug)]
pub struct InputSimilarities {
    kernel: Kernel,
    rho: Vec<f64>,
    sigma: Vec<f64>,
    source: Source,
}

#[derive(Clone, Debug)]
enum Source {
    Dense(SimilaritySet),
    OnTheFly(Matrix),
}

impl InputSimilarities {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Directional similarity `u_{j|i}` given the raw squared distance.
    #[inline]
    pub fn conditional(&self, i: usize, d_sq: f64) -> f64 {
        self.kernel.eval(calibrate_one(d_sq, self.rho[i]), self.sigma[i])
    }

    /// Symmetrized similarities among `batch` (global indices), in batch order.
    pub fn restrict(&self, batch: &[usize]) -> SimilaritySet {
        match &self.source {
            Source::Dense(full) => full.restrict(batch),
            Source::OnTheFly(x) => {
                let n = batch.len();
                let mut out = Matrix::zeros(n, n);
                for a in 0..n {
                    let i = batch[a];
                    for b in (a + 1)..n {
                        let j = batch[b];
                        let d = sq_dist(x.row(i), x.row(j));
                        let s = clamp_similarity(fuzzy_or(self.conditional(i, d), self.conditional(j, d)));
                        out[(a, b)] = s;
                        out[(b, a)] = s;
                    }
                }
                SimilaritySet::from_matrix_unchecked(out)
            }
        }
    }

    /// Whether the full similarity matrix is held in memory.
    pub fn is_dense(&self) -> bool {
        matches!(self.source, Source::Dense(_))
    }
}

/// Builds the input graph and similarity provider for a dataset.
pub fn input_similarities(ds: &Dataset, cfg: &GraphConfig) -> Result<(NeighborGraph, InputSimilarities), Error> {
    input_similarities_with_limit(ds, cfg, DENSE_LIMIT)
}

pub(crate) fn input_similarities_with_limit(
    ds: &Dataset,
    cfg: &GraphConfig,
    dense_limit: usize,
) -> Result<(NeighborGraph, InputSimilarities), Error> {
    let x = &ds.features;
    let m = x.rows();
    if m < 2 {
        return Err(Error::InvalidArgument("similarities need at least two points".into()));
    }
    let kernel = Kernel::new(cfg.nu_input)?;
    let mut evaluations = 0u64;
    let mut sigma = Vec::with_capacity(m);
    let mut converged = Vec::with_capacity(m);
    let mut residual = Vec::with_capacity(m);

    if m <= dense_limit {
        let d = pairwise_sq_distances(x);
        let knn = knn_from_sq_distances(&d, cfg.k)?;
        let rho = knn.rho();
        let mut cond = Matrix::zeros(m, m);
        let mut cal = Vec::with_capacity(m - 1);
        for i in 0..m {
            cal.clear();
            cal.extend((0..m).filter(|&j| j != i).map(|j| calibrate_one(d[(i, j)], rho[i])));
            let sol = solve_sigma_with(&kernel, &cal, cfg.q, None)?;
            evaluations += sol.evaluations;
            for (slot, j) in (0..m).filter(|&j| j != i).enumerate() {
                cond[(i, j)] = kernel.eval(cal[slot], sol.sigma);
            }
            evaluations += (m - 1) as u64;
            sigma.push(sol.sigma);
            converged.push(sol.converged);
            residual.push(sol.residual);
        }
        let dense = symmetrize(&cond)?;
        let graph = NeighborGraph {
            knn,
            rho: rho.clone(),
            sigma: sigma.clone(),
            sigma_converged: converged,
            sigma_residual: residual,
            q: cfg.q,
            nu_input: cfg.nu_input,
            kernel_evaluations: evaluations,
        };
        let provider = InputSimilarities {
            kernel,
            rho,
            sigma,
            source: Source::Dense(dense),
        };
        return Ok((graph, provider));
    }

    let k_sigma = sigma_neighbor_count(m, cfg.q);
    let wide = build_knn(x, cfg.k.max(k_sigma))?;
    let rho = wide.rho();
    for i in 0..m {
        let cal = calibrate(&wide.neighbor_sq_dists(i)[..k_sigma], rho[i]);
        let sol = solve_sigma_with(&kernel, &cal, cfg.q, None)?;
        evaluations += sol.evaluations;
        sigma.push(sol.sigma);
        converged.push(sol.converged);
        residual.push(sol.residual);
    }
    let graph = NeighborGraph {
        knn: wide.truncated(cfg.k),
        rho: rho.clone(),
        sigma: sigma.clone(),
        sigma_converged: converged,
        sigma_residual: residual,
        q: cfg.q,
        nu_input: cfg.nu_input,
        kernel_evaluations: evaluations,
    };
    let provider = InputSimilarities {
        kernel,
        rho,
        sigma,
        source: Source::OnTheFly(x.clone()),
    };
    Ok((graph, provider))
}
