use std::cmp::Ordering;

use crate::numerics::{sq_dist, Matrix};
use crate::Error;

/// Exact k nearest neighbours of every row.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnTable {
    k: usize,
    indices: Vec<usize>,
    sq_dists: Vec<f64>,
}

impl KnnTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        if self.k == 0 {
            0
        } else {
            self.indices.len() / self.k
        }
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Neighbour indices of point `i`, nearest first.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    pub fn neighbor_sq_dists(&self, i: usize) -> &[f64] {
        &self.sq_dists[i * self.k..(i + 1) * self.k]
    }

    /// Nearest-neighbour distance per point.
    pub fn rho(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.sq_dists[i * self.k].sqrt()).collect()
    }

    /// Keeps only the `k` nearest of each row.
    pub fn truncated(&self, k: usize) -> KnnTable {
        let k = k.min(self.k);
        let mut indices = Vec::with_capacity(self.len() * k);
        let mut sq_dists = Vec::with_capacity(self.len() * k);
        for i in 0..self.len() {
            indices.extend_from_slice(&self.neighbors(i)[..k]);
            sq_dists.extend_from_slice(&self.neighbor_sq_dists(i)[..k]);
        }
        KnnTable { k, indices, sq_dists }
    }
}

/// Orders `(distance, index)` pairs ascending, ties by smaller index.
#[inline]
pub(crate) fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// The `k` smallest entries of a distance row excluding `skip`.
pub(crate) fn k_smallest(row: impl Iterator<Item = (f64, usize)>, skip: usize, k: usize) -> Vec<(f64, usize)> {
    let mut cands: Vec<(f64, usize)> = row.filter(|&(_, j)| j != skip).collect();
    if k < cands.len() {
        cands.select_nth_unstable_by(k, by_distance_then_index);
        cands.truncate(k);
    }
    cands.sort_unstable_by(by_distance_then_index);
    cands
}

fn check_k(m: usize, k: usize) -> Result<(), Error> {
    if k == 0 || k >= m {
        return Err(Error::InvalidArgument(format!(
            "k must lie in [1, {}] for {m} points, got {k}",
            m.saturating_sub(1)
        )));
    }
    Ok(())
}

/// Brute-force k-NN under Euclidean distance, computing one row at a time.
pub fn build_knn(x: &Matrix, k: usize) -> Result<KnnTable, Error> {
    let m = x.rows();
    check_k(m, k)?;
    let mut indices = Vec::with_capacity(m * k);
    let mut sq_dists = Vec::with_capacity(m * k);
    let mut row = vec![0.0; m];
    for i in 0..m {
        let xi = x.row(i);
        for (j, d) in row.iter_mut().enumerate() {
            *d = sq_dist(xi, x.row(j));
        }
        for (d, j) in k_smallest(row.iter().copied().zip(0..m), i, k) {
            indices.push(j);
            sq_dists.push(d);
        }
    }
    Ok(KnnTable { k, indices, sq_dists })
}

/// k-NN from a precomputed squared-distance matrix.
pub fn knn_from_sq_distances(d: &Matrix, k: usize) -> Result<KnnTable, Error> {
    let m = d.rows();
    check_k(m, k)?;
    let mut indices = Vec::with_capacity(m * k);
    let mut sq_dists = Vec::with_capacity(m * k);
    for i in 0..m {
        for (dist, j) in k_smallest(d.row(i).iter().copied().zip(0..m), i, k) {
            indices.push(j);
            sq_dists.push(dist);
        }
    }
    Ok(KnnTable { k, indices, sq_dists })
}
