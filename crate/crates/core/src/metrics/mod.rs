//! Embedding quality measures between two layers: rank-based neighbourhood
//! preservation (continuity, trustworthiness, relative rank error), distance
//! correlation, class scatter rank mismatch and linear separability.

mod svm;

pub use svm::{acc, LinearSvm, SVM_LAMBDA};

use std::fmt;

use crate::numerics::{pairwise_sq_distances, sq_dist, Matrix, SeededRng};
use crate::Error;

/// Above this many points the distance correlation uses sampled pairs.
pub const DPC_FULL_LIMIT: usize = 3000;
pub const DPC_SAMPLE_PAIRS: usize = 2_000_000;

/// Neighbour ranks: `rank(i, j)` is 1 for the nearest `j ≠ i`, ties by index.
#[derive(Clone, Debug, PartialEq)]
pub struct RankTable {
    m: usize,
    /// `ranks[i·m + j]`, zero on the diagonal.
    ranks: Vec<u32>,
    /// `order[i·(m−1) + r]` is the point at rank `r + 1` from `i`.
    order: Vec<u32>,
}

impl RankTable {
    pub fn new(x: &Matrix) -> Self {
        Self::from_sq_distances(&pairwise_sq_distances(x))
    }

    pub fn from_sq_distances(d: &Matrix) -> Self {
        let m = d.rows();
        let mut ranks = vec![0u32; m * m];
        let mut order = Vec::with_capacity(m * m.saturating_sub(1));
        let mut row: Vec<(f64, usize)> = Vec::with_capacity(m);
        for i in 0..m {
            row.clear();
            row.extend((0..m).filter(|&j| j != i).map(|j| (d[(i, j)], j)));
            row.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for (r, &(_, j)) in row.iter().enumerate() {
                ranks[i * m + j] = r as u32 + 1;
                order.push(j as u32);
            }
        }
        Self { m, ranks, order }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    #[inline]
    pub fn rank(&self, i: usize, j: usize) -> u32 {
        self.ranks[i * self.m + j]
    }

    /// The `k` nearest of `i`, nearest first.
    pub fn nearest(&self, i: usize, k: usize) -> impl Iterator<Item = usize> + '_ {
        let w = self.m - 1;
        self.order[i * w..i * w + k].iter().map(|&j| j as usize)
    }
}

fn check_k(m: usize, k: usize) -> Result<(), Error> {
    if k == 0 || k >= m || 2 * m <= 3 * k + 1 {
        return Err(Error::InvalidArgument(format!(
            "k = {k} is outside the valid range for {m} points (need 1 ≤ k and 2M − 3k − 1 > 0)"
        )));
    }
    Ok(())
}

fn check_pair(a: &RankTable, b: &RankTable) -> Result<(), Error> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("{} versus {} points", a.len(), b.len())));
    }
    Ok(())
}

/// `1 − T Σ_i Σ_{j ∈ N_a(i) \ N_b(i)} (r_b(i,j) − k)`.
fn rank_violation_score(a: &RankTable, b: &RankTable, k: usize) -> f64 {
    let m = a.len();
    let mut total: u64 = 0;
    for i in 0..m {
        for j in a.nearest(i, k) {
            let r = b.rank(i, j) as usize;
            if r > k {
                total += (r - k) as u64;
            }
        }
    }
    let (mf, kf) = (m as f64, k as f64);
    1.0 - 2.0 / (mf * kf * (2.0 * mf - 3.0 * kf - 1.0)) * total as f64
}

/// Continuity: input neighbours that are missing from the latent neighbourhood.
pub fn continuity_ranks(input: &RankTable, latent: &RankTable, k: usize) -> Result<f64, Error> {
    check_pair(input, latent)?;
    check_k(input.len(), k)?;
    Ok(rank_violation_score(input, latent, k))
}

/// Trustworthiness: latent neighbours that are not input neighbours.
pub fn trustworthiness_ranks(input: &RankTable, latent: &RankTable, k: usize) -> Result<f64, Error> {
    check_pair(input, latent)?;
    check_k(input.len(), k)?;
    Ok(rank_violation_score(latent, input, k))
}

pub fn continuity(x_in: &Matrix, x_lat: &Matrix, k: usize) -> Result<f64, Error> {
    continuity_ranks(&RankTable::new(x_in), &RankTable::new(x_lat), k)
}

pub fn trustworthiness(x_in: &Matrix, x_lat: &Matrix, k: usize) -> Result<f64, Error> {
    trustworthiness_ranks(&RankTable::new(x_in), &RankTable::new(x_lat), k)
}

fn rre_normalizer(m: usize, k: usize) -> f64 {
    let mf = m as f64;
    let s: f64 = (1..=k).map(|kk| (mf - 2.0 * kk as f64).abs() / kk as f64).sum();
    1.0 / (mf * s)
}

/// `Σ_i Σ_{j∈N_a(i)} |r_a − r_b| / r_a`, walking `a`'s ranks in order.
fn mean_rank_change(a: &RankTable, b: &RankTable, k: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in a.nearest(i, k) {
            let ra = a.rank(i, j) as f64;
            let rb = b.rank(i, j) as f64;
            s += (ra - rb).abs() / ra;
        }
    }
    s
}

/// Mean relative rank error over both directions.
pub fn rre_ranks(input: &RankTable, latent: &RankTable, k: usize) -> Result<f64, Error> {
    check_pair(input, latent)?;
    let m = input.len();
    if k == 0 || k >= m {
        return Err(Error::InvalidArgument(format!("k = {k} is outside [1, {}]", m.saturating_sub(1))));
    }
    let t = rre_normalizer(m, k);
    let from_input = t * mean_rank_change(input, latent, k);
    let from_latent = t * mean_rank_change(latent, input, k);
    Ok((from_latent + from_input) / 2.0)
}

pub fn rre(x_in: &Matrix, x_lat: &Matrix, k: usize) -> Result<f64, Error> {
    rre_ranks(&RankTable::new(x_in), &RankTable::new(x_lat), k)
}

/// Pearson correlation of two equal-length samples; `None` on zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (da, db) = (x - ma, y - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Distance correlation result; `sampled` when pairs were subsampled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dpc {
    pub value: Option<f64>,
    pub sampled: bool,
}

/// Pearson correlation between corresponding pairwise distances.
///
/// All unordered pairs up to [`DPC_FULL_LIMIT`] points (the ordered-pair
/// population repeats each pair twice and has the same correlation);
/// above it, [`DPC_SAMPLE_PAIRS`] ordered pairs drawn with `rng`.
pub fn dpc(x_in: &Matrix, x_lat: &Matrix, rng: &mut SeededRng) -> Result<Dpc, Error> {
    let m = x_in.rows();
    if x_lat.rows() != m {
        return Err(Error::Shape(format!("{m} input rows versus {} latent rows", x_lat.rows())));
    }
    if m < 3 {
        return Err(Error::InvalidArgument(format!("distance correlation needs at least 3 points, got {m}")));
    }
    let dist = |x: &Matrix, i: usize, j: usize| sq_dist(x.row(i), x.row(j)).sqrt();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let sampled = m > DPC_FULL_LIMIT;
    if sampled {
        a.reserve(DPC_SAMPLE_PAIRS);
        b.reserve(DPC_SAMPLE_PAIRS);
        while a.len() < DPC_SAMPLE_PAIRS {
            let i = rng.below(m);
            let j = rng.below(m);
            if i != j {
                a.push(dist(x_in, i, j));
                b.push(dist(x_lat, i, j));
            }
        }
    } else {
        a.reserve(m * (m - 1) / 2);
        b.reserve(m * (m - 1) / 2);
        for i in 0..m {
            for j in (i + 1)..m {
                a.push(dist(x_in, i, j));
                b.push(dist(x_lat, i, j));
            }
        }
    }
    Ok(Dpc {
        value: pearson(&a, &b),
        sampled,
    })
}

/// Mean distance to the class centroid, per class.
pub fn class_scatters(x: &Matrix, labels: &[usize], num_classes: usize) -> Vec<f64> {
    let d = x.cols();
    let mut mean = vec![vec![0.0; d]; num_classes];
    let mut count = vec![0usize; num_classes];
    for (row, &c) in x.iter_rows().zip(labels) {
        count[c] += 1;
        for (m, v) in mean[c].iter_mut().zip(row) {
            *m += v;
        }
    }
    for (m, &n) in mean.iter_mut().zip(&count) {
        if n > 0 {
            for v in m.iter_mut() {
                *v /= n as f64;
            }
        }
    }
    let mut scatter = vec![0.0; num_classes];
    for (row, &c) in x.iter_rows().zip(labels) {
        scatter[c] += sq_dist(row, &mean[c]).sqrt();
    }
    for (s, &n) in scatter.iter_mut().zip(&count) {
        if n > 0 {
            *s /= n as f64;
        }
    }
    scatter
}

/// Rank (1 = smallest) of each value, ties by position.
fn ascending_ranks(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
    let mut r = vec![0; v.len()];
    for (pos, &c) in idx.iter().enumerate() {
        r[c] = pos + 1;
    }
    r
}

/// Footrule distance between two rank vectors, over `C²`.
pub fn footrule(ra: &[usize], rb: &[usize]) -> f64 {
    let c = ra.len() as f64;
    let s: usize = ra.iter().zip(rb).map(|(a, b)| a.abs_diff(*b)).sum();
    s as f64 / (c * c)
}

/// Scatter rank mismatch between the two spaces.
pub fn srm(x_in: &Matrix, x_lat: &Matrix, labels: &[usize]) -> Result<f64, Error> {
    if labels.len() != x_in.rows() || x_lat.rows() != x_in.rows() {
        return Err(Error::Shape("labels and spaces must have the same number of rows".into()));
    }
    let c = labels.iter().max().map_or(0, |&m| m + 1);
    let mut seen = vec![false; c];
    for &l in labels {
        seen[l] = true;
    }
    if c == 0 || seen.iter().any(|s| !s) {
        return Err(Error::InvalidArgument("every class in 0..C must have at least one point".into()));
    }
    let ra = ascending_ranks(&class_scatters(x_in, labels, c));
    let rb = ascending_ranks(&class_scatters(x_lat, labels, c));
    Ok(footrule(&ra, &rb))
}

/// Default neighbourhood size `max(1, ⌊M/20⌋)`.
pub fn default_k(m: usize) -> usize {
    (m / 20).max(1)
}

/// All measures for one pair of spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub con: f64,
    pub tru: f64,
    pub rre: f64,
    /// `None` when either space has no distance variance.
    pub dpc: Option<f64>,
    pub dpc_sampled: bool,
    /// `None` without labels.
    pub srm: Option<f64>,
    /// `None` without labels, or with a single class.
    pub acc: Option<f64>,
    pub k_used: usize,
}

impl MetricsReport {
    /// `(key, value)` pairs in a fixed order; missing values carry a reason.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>, why: &str| v.map_or_else(|| format!("skipped: {why}"), |x| format!("{x:?}"));
        vec![
            ("con", format!("{:?}", self.con)),
            ("tru", format!("{:?}", self.tru)),
            ("rre", format!("{:?}", self.rre)),
            ("dpc", opt(self.dpc, "zero distance variance")),
            ("dpc_sampled", self.dpc_sampled.to_string()),
            ("srm", opt(self.srm, "no labels")),
            ("acc", opt(self.acc, if self.srm.is_some() { "fewer than two classes" } else { "no labels" })),
            ("k_used", self.k_used.to_string()),
        ]
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// Computes every available measure; label-based ones are skipped without labels.
pub fn evaluate_all(
    x_in: &Matrix,
    x_lat: &Matrix,
    labels: Option<&[usize]>,
    k: Option<usize>,
    seed: u64,
) -> Result<MetricsReport, Error> {
    let m = x_in.rows();
    if x_lat.rows() != m {
        return Err(Error::Shape(format!("{m} input rows versus {} latent rows", x_lat.rows())));
    }
    let k = k.unwrap_or_else(|| default_k(m));
    let ri = RankTable::new(x_in);
    let rl = RankTable::new(x_lat);
    let con = continuity_ranks(&ri, &rl, k)?;
    let tru = trustworthiness_ranks(&ri, &rl, k)?;
    let rre = rre_ranks(&ri, &rl, k)?;
    let d = dpc(x_in, x_lat, &mut SeededRng::new(seed))?;
    let (srm_v, acc_v) = match labels {
        Some(l) => {
            let s = srm(x_in, x_lat, l)?;
            let classes = l.iter().max().map_or(0, |&c| c + 1);
            let a = if classes >= 2 { Some(acc(x_lat, l, seed)?) } else { None };
            (Some(s), a)
        }
        None => (None, None),
    };
    Ok(MetricsReport {
        con,
        tru,
        rre,
        dpc: d.value,
        dpc_sampled: d.sampled,
        srm: srm_v,
        acc: acc_v,
        k_used: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::random_rotation;

    fn random(m: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = SeededRng::new(seed);
        Matrix::from_vec(m, d, (0..m * d).map(|_| rng.normal()).collect()).unwrap()
    }

    #[test]
    fn ranks_are_permutations() {
        let x = random(30, 3, 1);
        let t = RankTable::new(&x);
        for i in 0..30 {
            let mut r: Vec<u32> = (0..30).filter(|&j| j != i).map(|j| t.rank(i, j)).collect();
            r.sort();
            assert_eq!(r, (1..30).collect::<Vec<u32>>());
            assert_eq!(t.rank(i, i), 0);
        }
    }

    #[test]
    fn ties_by_index() {
        let x = Matrix::from_rows(&[vec![0.0], vec![0.0], vec![0.0], vec![5.0]]).unwrap();
        let t = RankTable::new(&x);
        assert_eq!((t.rank(0, 1), t.rank(0, 2), t.rank(0, 3)), (1, 2, 3));
        assert_eq!((t.rank(2, 0), t.rank(2, 1)), (1, 2));
    }

    #[test]
    fn identity_and_isometry() {
        let x = random(60, 4, 2);
        let labels: Vec<usize> = (0..60).map(|i| i % 3).collect();
        let r = evaluate_all(&x, &x, Some(&labels), None, 0).unwrap();
        assert_eq!((r.con, r.tru, r.rre, r.srm), (1.0, 1.0, 0.0, Some(0.0)));
        assert!((r.dpc.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r.k_used, 3);

        let rot = x.matmul(&random_rotation(4, &mut SeededRng::new(3))).unwrap().scale(2.5);
        let r = evaluate_all(&x, &rot, Some(&labels), None, 0).unwrap();
        assert_eq!((r.con, r.tru, r.rre, r.srm), (1.0, 1.0, 0.0, Some(0.0)));
        assert!((r.dpc.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn con_tru_swap_symmetry() {
        let a = random(40, 3, 4);
        let b = random(40, 2, 5);
        assert_eq!(continuity(&a, &b, 5).unwrap(), trustworthiness(&b, &a, 5).unwrap());
        assert!(continuity(&a, &b, 0).is_err());
        assert!(continuity(&a, &b, 27).is_err());
    }

    #[test]
    fn srm_hand_value() {
        assert!((footrule(&[1, 2, 3], &[3, 2, 1]) - 4.0 / 9.0).abs() < 1e-15);
        let x = random(30, 2, 6);
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        assert_eq!(srm(&x, &x.scale(7.0), &labels).unwrap(), 0.0);
        assert!(srm(&x, &x, &[0; 29]).is_err());
    }

    #[test]
    fn dpc_degenerate_is_none() {
        let x = random(10, 2, 7);
        let z = Matrix::zeros(10, 2);
        assert_eq!(dpc(&x, &z, &mut SeededRng::new(0)).unwrap().value, None);
        let r = evaluate_all(&x, &z, None, None, 0).unwrap();
        assert_eq!(r.dpc, None);
        assert_eq!(r.srm, None);
        assert!(r.to_string().contains("srm = skipped: no labels"));
    }

    #[test]
    fn default_k_values() {
        assert_eq!(default_k(100), 5);
        assert_eq!(default_k(19), 1);
        assert_eq!(default_k(1500), 75);
    }
}
