use crate::numerics::{Matrix, SeededRng};
use crate::Error;

/// L2 regularization strength of the hinge-loss objective.
pub const SVM_LAMBDA: f64 = 1e-4;
const FOLDS: usize = 5;
const MIN_ITERS: usize = 20_000;
const ITERS_PER_SAMPLE: usize = 20;

/// One-vs-rest linear max-margin classifier on standardized features.
#[derive(Clone, Debug)]
pub struct LinearSvm {
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// Per class, feature weights followed by the bias weight.
    weights: Vec<Vec<f64>>,
}

/// Pegasos on one binary problem with a constant-1 feature appended.
///
/// Returns the average of the second half of the iterates.
fn pegasos(x: &[Vec<f64>], y: &[f64], lambda: f64, iters: usize, rng: &mut SeededRng) -> Vec<f64> {
    let d = x[0].len();
    let mut w = vec![0.0; d];
    let mut avg = vec![0.0; d];
    let radius = 1.0 / lambda.sqrt();
    let start_avg = iters / 2;
    for t in 1..=iters {
        let i = rng.below(x.len());
        let eta = 1.0 / (lambda * t as f64);
        let margin = y[i] * w.iter().zip(&x[i]).map(|(a, b)| a * b).sum::<f64>();
        let shrink = 1.0 - eta * lambda;
        for v in w.iter_mut() {
            *v *= shrink;
        }
        if margin < 1.0 {
            for (v, xi) in w.iter_mut().zip(&x[i]) {
                *v += eta * y[i] * xi;
            }
        }
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > radius {
            for v in w.iter_mut() {
                *v *= radius / norm;
            }
        }
        if t > start_avg {
            for (a, v) in avg.iter_mut().zip(&w) {
                *a += v;
            }
        }
    }
    let n = (iters - start_avg) as f64;
    avg.iter().map(|a| a / n).collect()
}

impl LinearSvm {
    pub fn fit(x: &Matrix, labels: &[usize], num_classes: usize, rng: &mut SeededRng) -> Result<Self, Error> {
        if x.rows() == 0 || x.rows() != labels.len() {
            return Err(Error::Shape("classifier needs one label per nonempty row".into()));
        }
        if num_classes < 2 {
            return Err(Error::InvalidArgument("classification needs at least two classes".into()));
        }
        let (n, d) = x.shape();
        let mean = x.column_means();
        let mut scale = vec![0.0; d];
        for row in x.iter_rows() {
            for ((s, v), m) in scale.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in scale.iter_mut() {
            *s = (*s / n as f64).sqrt();
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        let mut svm = Self {
            mean,
            scale,
            weights: Vec::with_capacity(num_classes),
        };
        let feats: Vec<Vec<f64>> = x.iter_rows().map(|r| svm.features(r)).collect();
        let iters = MIN_ITERS.max(ITERS_PER_SAMPLE * n);
        for c in 0..num_classes {
            let y: Vec<f64> = labels.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
            svm.weights.push(pegasos(&feats, &y, SVM_LAMBDA, iters, rng));
        }
        Ok(svm)
    }

    fn features(&self, row: &[f64]) -> Vec<f64> {
        let mut f: Vec<f64> = row
            .iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect();
        f.push(1.0);
        f
    }

    /// Class with the largest decision value, lowest index on ties.
    pub fn predict(&self, row: &[f64]) -> usize {
        let f = self.features(row);
        let mut best = (0, f64::NEG_INFINITY);
        for (c, w) in self.weights.iter().enumerate() {
            let s: f64 = w.iter().zip(&f).map(|(a, b)| a * b).sum();
            if s > best.1 {
                best = (c, s);
            }
        }
        best.0
    }
}

/// Mean test accuracy of the linear classifier under seeded 5-fold cross-validation.
pub fn acc(x: &Matrix, labels: &[usize], seed: u64) -> Result<f64, Error> {
    let n = x.rows();
    if labels.len() != n {
        return Err(Error::Shape(format!("{} labels for {n} rows", labels.len())));
    }
    let classes = labels.iter().max().map_or(0, |&c| c + 1);
    if classes < 2 {
        return Err(Error::InvalidArgument("classification needs at least two classes".into()));
    }
    if n < 2 * FOLDS {
        return Err(Error::InvalidArgument(format!("cross-validation needs at least {} samples, got {n}", 2 * FOLDS)));
    }
    let mut rng = SeededRng::new(seed);
    let perm = rng.permutation(n);
    let mut fold = vec![0; n];
    for (p, &i) in perm.iter().enumerate() {
        fold[i] = p % FOLDS;
    }
    let mut total = 0.0;
    for f in 0..FOLDS {
        let train: Vec<usize> = (0..n).filter(|&i| fold[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| fold[i] == f).collect();
        let tl: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
        let svm = LinearSvm::fit(&x.select_rows(&train), &tl, classes, &mut rng)?;
        let correct = test.iter().filter(|&&i| svm.predict(x.row(i)) == labels[i]).count();
        total += correct as f64 / test.len() as f64;
    }
    Ok(total / FOLDS as f64)
}
