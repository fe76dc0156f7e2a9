use crate::numerics::{log_gamma, Matrix};
use crate::Error;

/// Lower clamp for symmetrized similarities; the upper clamp is `1 − CLAMP_EPS`.
pub const CLAMP_EPS: f64 = 1e-6;

pub const SIGMA_MIN: f64 = 1e-10;
pub const SIGMA_MAX: f64 = 1e6;
pub const SIGMA_MAX_ITERS: usize = 64;
/// Accepted |Σ u − log₂Q| for a converged scale.
pub const SIGMA_TOL: f64 = 1e-5;

fn ln_c_nu(nu: f64) -> Result<f64, Error> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::Domain(format!("ν must be positive and finite, got {nu}")));
    }
    let ratio = log_gamma((nu + 1.0) / 2.0)? - 0.5 * (nu * std::f64::consts::PI).ln() - log_gamma(nu / 2.0)?;
    Ok((2.0 * std::f64::consts::PI).ln() + 2.0 * ratio)
}

/// Normalizer `C_ν = 2π (Γ((ν+1)/2) / (√(νπ) Γ(ν/2)))²`, evaluated in log space.
pub fn c_nu(nu: f64) -> Result<f64, Error> {
    ln_c_nu(nu).map(f64::exp)
}

/// Squared-t similarity kernel for a fixed shape `ν`.
#[derive(Clone, Copy, Debug)]
pub struct Kernel {
    nu: f64,
    ln_c: f64,
}

impl Kernel {
    pub fn new(nu: f64) -> Result<Self, Error> {
        Ok(Self {
            nu,
            ln_c: ln_c_nu(nu)?,
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Value at zero distance.
    pub fn peak(&self) -> f64 {
        self.ln_c.exp()
    }

    /// `C_ν (1 + d²/(σν))^{−(ν+1)}`.
    #[inline]
    pub fn eval(&self, d_sq: f64, sigma: f64) -> f64 {
        (self.ln_c - (self.nu + 1.0) * (d_sq / (sigma * self.nu)).ln_1p()).exp()
    }

    /// Kernel value together with `∂u/∂(d²)`.
    #[inline]
    pub fn eval_with_slope(&self, d_sq: f64, sigma: f64) -> (f64, f64) {
        let u = self.eval(d_sq, sigma);
        (u, -u * (self.nu + 1.0) / (sigma * self.nu + d_sq))
    }
}

/// One-shot kernel evaluation.
pub fn kernel(d_sq: f64, sigma: f64, nu: f64) -> Result<f64, Error> {
    Ok(Kernel::new(nu)?.eval(d_sq, sigma))
}

/// Distances recentred on the nearest-neighbour offset:
/// `max(0, √d² − ρ)²` for every entry.
pub fn calibrate(sq_dists: &[f64], rho: f64) -> Vec<f64> {
    sq_dists.iter().map(|&d| calibrate_one(d, rho)).collect()
}

#[inline]
pub(crate) fn calibrate_one(d_sq: f64, rho: f64) -> f64 {
    let c = (d_sq.sqrt() - rho).max(0.0);
    c * c
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaSolution {
    pub sigma: f64,
    pub converged: bool,
    /// `Σ u − log₂Q` at the returned scale.
    pub residual: f64,
    /// Kernel evaluations spent.
    pub evaluations: u64,
}

/// Scale `σ` such that `Σ_j kernel(d²_j, σ, ν) = log₂Q`.
pub fn solve_sigma(cal_sq_dists: &[f64], q: f64, nu: f64) -> Result<SigmaSolution, Error> {
    let kernel = Kernel::new(nu)?;
    solve_sigma_with(&kernel, cal_sq_dists, q, None)
}

/// Bracketed root search over `ln σ ∈ [ln σ_min, ln σ_max]`.
///
/// The per-point sum is strictly increasing in `σ` whenever some distance is
/// positive, so the bracket always contains the root if one exists. Each
/// iteration takes a Newton step in `ln σ` when it lands strictly inside the
/// bracket and bisects otherwise. Targets outside the attainable range
/// `[n₀·C_ν, n·C_ν]` (n₀ zero distances) are detected up front.
pub fn solve_sigma_with(
    kernel: &Kernel,
    cal_sq_dists: &[f64],
    q: f64,
    initial: Option<f64>,
) -> Result<SigmaSolution, Error> {
    if cal_sq_dists.is_empty() {
        return Err(Error::InvalidArgument("scale search needs at least one distance".into()));
    }
    if !(q > 1.0) {
        return Err(Error::InvalidArgument(format!("perplexity target must exceed 1, got {q}")));
    }
    let target = q.log2();
    let n = cal_sq_dists.len() as u64;
    let peak = kernel.peak();
    let zeros = cal_sq_dists.iter().filter(|&&d| d == 0.0).count() as f64;
    let nu1 = kernel.nu() + 1.0;

    let sum_at = |sigma: f64| -> (f64, f64) {
        let mut s = 0.0;
        let mut ds = 0.0;
        for &d in cal_sq_dists {
            let x = d / (sigma * kernel.nu());
            let u = kernel.eval(d, sigma);
            s += u;
            ds += u * nu1 * x / (1.0 + x);
        }
        (s, ds)
    };

    let clamp_to = |sigma: f64| {
        let (s, _) = sum_at(sigma);
        SigmaSolution {
            sigma,
            converged: (s - target).abs() <= SIGMA_TOL,
            residual: s - target,
            evaluations: n,
        }
    };
    if (cal_sq_dists.len() as f64) * peak < target - SIGMA_TOL {
        return Ok(clamp_to(SIGMA_MAX));
    }
    if zeros * peak > target + SIGMA_TOL {
        return Ok(clamp_to(SIGMA_MIN));
    }

    let (mut lo, mut hi) = (SIGMA_MIN.ln(), SIGMA_MAX.ln());
    let mut s = match initial {
        Some(v) if v > 0.0 && v.is_finite() => v.ln().clamp(lo, hi),
        _ => 0.5 * (lo + hi),
    };
    let mut evaluations = 0;
    let mut last = (f64::NAN, s);
    for _ in 0..SIGMA_MAX_ITERS {
        let sigma = s.exp();
        let (sum, dsum) = sum_at(sigma);
        evaluations += n;
        let f = sum - target;
        last = (f, s);
        if f.abs() <= SIGMA_TOL {
            return Ok(SigmaSolution {
                sigma,
                converged: true,
                residual: f,
                evaluations,
            });
        }
        if f < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let newton = s - f / dsum;
        s = if dsum > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    let (f, s_last) = last;
    let sigma = if (s_last - SIGMA_MAX.ln()).abs() < 1e-6 {
        SIGMA_MAX
    } else if (s_last - SIGMA_MIN.ln()).abs() < 1e-6 {
        SIGMA_MIN
    } else {
        s_last.exp()
    };
    Ok(SigmaSolution {
        sigma,
        converged: false,
        residual: f,
        evaluations,
    })
}

/// Fuzzy similarities `u_ij ∈ [ε, 1−ε]`, symmetric with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilaritySet {
    values: Matrix,
}

impl SimilaritySet {
    /// Wraps an already symmetric, clamped matrix.
    pub(crate) fn from_matrix_unchecked(values: Matrix) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.values
    }

    /// Sub-set on the given positions, in order.
    pub fn restrict(&self, idx: &[usize]) -> SimilaritySet {
        let n = idx.len();
        let mut out = Matrix::zeros(n, n);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out[(a, b)] = if a == b { 0.0 } else { self.values[(i, j)] };
            }
        }
        SimilaritySet { values: out }
    }
}

#[inline]
pub(crate) fn clamp_similarity(u: f64) -> f64 {
    u.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS)
}

/// Probabilistic-OR symmetrization of directional similarities
/// (`u_cond[(i, j)] = u_{j|i}`), then clamping.
pub fn symmetrize(u_cond: &Matrix) -> Result<SimilaritySet, Error> {
    let (n, c) = u_cond.shape();
    if n != c {
        return Err(Error::Shape(format!("directional similarities must be square, got {n}x{c}")));
    }
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let a = u_cond[(i, j)];
            let b = u_cond[(j, i)];
            let s = clamp_similarity(a + b - a * b);
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    Ok(SimilaritySet { values: out })
}

/// Symmetrized value before clamping.
#[inline]
pub fn fuzzy_or(a: f64, b: f64) -> f64 {
    a + b - a * b
}
