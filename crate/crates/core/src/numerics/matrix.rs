use std::fmt;

use crate::Error;

/// Dense row-major matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix({}x{})", self.rows, self.cols)
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, Error> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "buffer of length {} cannot hold a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, Error> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        let cols = self.cols.max(1);
        self.data.chunks_exact(cols).take(self.rows)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Rows gathered in the order given by `indices`.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// Leading `n` columns of every row.
    pub fn first_cols(&self, n: usize) -> Matrix {
        let n = n.min(self.cols);
        let mut data = Vec::with_capacity(self.rows * n);
        for r in self.iter_rows() {
            data.extend_from_slice(&r[..n]);
        }
        Matrix {
            rows: self.rows,
            cols: n,
            data,
        }
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, Error> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        gemm(
            GemmOperand::plain(self),
            GemmOperand::plain(other),
            &mut out,
            0.0,
        );
        Ok(out)
    }

    /// `selfᵀ · other`.
    pub fn t_matmul(&self, other: &Matrix) -> Result<Matrix, Error> {
        if self.rows != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply ({}x{})ᵀ by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        gemm(
            GemmOperand::transposed(self),
            GemmOperand::plain(other),
            &mut out,
            0.0,
        );
        Ok(out)
    }

    /// `self · otherᵀ`.
    pub fn matmul_t(&self, other: &Matrix) -> Result<Matrix, Error> {
        if self.cols != other.cols {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by ({}x{})ᵀ",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.rows);
        gemm(
            GemmOperand::plain(self),
            GemmOperand::transposed(other),
            &mut out,
            0.0,
        );
        Ok(out)
    }

    /// Column sums as a vector of length `cols`.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for r in self.iter_rows() {
            for (o, v) in out.iter_mut().zip(r) {
                *o += v;
            }
        }
        out
    }

    pub fn column_means(&self) -> Vec<f64> {
        let n = self.rows.max(1) as f64;
        self.column_sums().into_iter().map(|s| s / n).collect()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

struct GemmOperand<'a> {
    m: &'a Matrix,
    transposed: bool,
}

impl<'a> GemmOperand<'a> {
    fn plain(m: &'a Matrix) -> Self {
        Self {
            m,
            transposed: false,
        }
    }

    fn transposed(m: &'a Matrix) -> Self {
        Self {
            m,
            transposed: true,
        }
    }

    fn logical_shape(&self) -> (usize, usize) {
        if self.transposed {
            (self.m.cols, self.m.rows)
        } else {
            (self.m.rows, self.m.cols)
        }
    }

    fn strides(&self) -> (isize, isize) {
        let c = self.m.cols as isize;
        if self.transposed {
            (1, c)
        } else {
            (c, 1)
        }
    }
}

/// `out = a·b + keep·out`, shapes pre-validated by the callers.
fn gemm(a: GemmOperand<'_>, b: GemmOperand<'_>, out: &mut Matrix, keep: f64) {
    let (m, k) = a.logical_shape();
    let (_, n) = b.logical_shape();
    debug_assert_eq!(out.shape(), (m, n));
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for v in out.as_mut_slice() {
            *v *= keep;
        }
        return;
    }
    let (rsa, csa) = a.strides();
    let (rsb, csb) = b.strides();
    // SAFETY: pointers come from live slices whose lengths match the logical
    // shapes and strides computed above; `out` does not alias the inputs.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.m.data.as_ptr(),
            rsa,
            csa,
            b.m.data.as_ptr(),
            rsb,
            csb,
            keep,
            out.data.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Squared Euclidean distances between all rows of `a`.
///
/// Each unordered pair is computed once with a sequential per-pair sum and
/// mirrored, so the result is exactly symmetric with a zero diagonal.
pub fn pairwise_sq_distances(a: &Matrix) -> Matrix {
    let m = a.rows();
    let mut out = Matrix::zeros(m, m);
    for i in 0..m {
        let ri = a.row(i);
        for j in (i + 1)..m {
            let d = sq_dist(ri, a.row(j));
            out.data[i * m + j] = d;
            out.data[j * m + i] = d;
        }
    }
    out
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}
