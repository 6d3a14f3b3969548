//! Dense and CSR matrices plus the handful of kernels the encoder and the
//! evaluation code need.
//!
//! Everything is `f64` and row-major. Products skip exact zeros in the left
//! operand, which is what makes bag-of-words feature matrices cheap to push
//! through the encoder. Row-parallel kernels write disjoint output rows, so
//! results do not depend on the thread count.

use std::ops::{Index, IndexMut};

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows below this size are multiplied sequentially.
const PAR_MIN_ROWS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "DenseMatrix::from_vec",
                format!("{} values for a {rows}x{cols} matrix", data.len()),
            ));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows. An empty slice gives a 0x0 matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::shape(
                    "DenseMatrix::from_rows",
                    format!("row {i} has {} entries, expected {cols}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Ok(DenseMatrix { rows: rows.len(), cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
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

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        let cols = self.cols.max(1);
        self.data.chunks_exact(cols).take(self.rows)
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `self · other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        matmul(self, other)
    }

    pub fn scale(&self, c: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn scale_in_place(&mut self, c: f64) {
        self.data.iter_mut().for_each(|v| *v *= c);
    }

    /// `self += c · other`.
    pub fn add_scaled(&mut self, other: &DenseMatrix, c: f64) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(
                "DenseMatrix::add_scaled",
                format!("{:?} vs {:?}", self.shape(), other.shape()),
            ));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff on mismatched shapes");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn row_norms(&self) -> Vec<f64> {
        self.row_iter().map(norm).collect()
    }

    /// Copy of the rows listed in `idx`, in that order.
    pub fn select_rows(&self, idx: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        DenseMatrix { rows: idx.len(), cols: self.cols, data }
    }

    /// Matrix-vector product `self · v`.
    pub fn mat_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::shape(
                "DenseMatrix::mat_vec",
                format!("{}x{} times vector of length {}", self.rows, self.cols, v.len()),
            ));
        }
        Ok(self.row_iter().map(|r| dot(r, v)).collect())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Dense product `a · b`, skipping zero entries of `a`.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.rows {
        return Err(Error::shape(
            "matmul",
            format!("{}x{} times {}x{}", a.rows, a.cols, b.rows, b.cols),
        ));
    }
    let mut out = DenseMatrix::zeros(a.rows, b.cols);
    if b.cols == 0 {
        return Ok(out);
    }
    let kernel = |(i, out_row): (usize, &mut [f64])| {
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik != 0.0 {
                axpy(aik, b.row(k), out_row);
            }
        }
    };
    if a.rows >= PAR_MIN_ROWS {
        out.data.par_chunks_mut(b.cols).enumerate().for_each(kernel);
    } else {
        out.data.chunks_mut(b.cols).enumerate().for_each(kernel);
    }
    Ok(out)
}

/// `aᵀ · b`. Transposes `a` once and reuses the zero-skipping parallel kernel.
pub fn matmul_tn(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows != b.rows {
        return Err(Error::shape(
            "matmul_tn",
            format!("({}x{})ᵀ times {}x{}", a.rows, a.cols, b.rows, b.cols),
        ));
    }
    matmul(&a.transpose(), b)
}

/// `a · bᵀ`.
pub fn matmul_nt(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.cols {
        return Err(Error::shape(
            "matmul_nt",
            format!("{}x{} times ({}x{})ᵀ", a.rows, a.cols, b.rows, b.cols),
        ));
    }
    let mut out = DenseMatrix::zeros(a.rows, b.rows);
    if b.rows == 0 {
        return Ok(out);
    }
    let kernel = |(i, out_row): (usize, &mut [f64])| {
        let a_row = a.row(i);
        for (j, o) in out_row.iter_mut().enumerate() {
            *o = dot(a_row, b.row(j));
        }
    };
    if a.rows >= PAR_MIN_ROWS {
        out.data.par_chunks_mut(b.rows).enumerate().for_each(kernel);
    } else {
        out.data.chunks_mut(b.rows).enumerate().for_each(kernel);
    }
    Ok(out)
}

/// Compressed sparse row matrix with strictly increasing column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::shape("CsrMatrix::new", msg));
        if row_ptr.len() != n_rows + 1 {
            return bad(format!("row_ptr has length {}, expected {}", row_ptr.len(), n_rows + 1));
        }
        if row_ptr[0] != 0 || row_ptr[n_rows] != col_idx.len() || col_idx.len() != values.len() {
            return bad("row_ptr endpoints disagree with col_idx/values".into());
        }
        for i in 0..n_rows {
            if row_ptr[i] > row_ptr[i + 1] {
                return bad(format!("row_ptr decreases at row {i}"));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("row {i} column indices not strictly increasing"));
            }
            if cols.last().is_some_and(|&c| c >= n_cols) {
                return bad(format!("row {i} has a column index >= {n_cols}"));
            }
        }
        Ok(CsrMatrix { n_rows, n_cols, row_ptr, col_idx, values })
    }

    /// Builds from `(row, col, value)` triplets; duplicate positions are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted = triplets.to_vec();
        for &(r, c, _) in &sorted {
            if r >= n_rows || c >= n_cols {
                return Err(Error::shape(
                    "CsrMatrix::from_triplets",
                    format!("entry ({r}, {c}) outside {n_rows}x{n_cols}"),
                ));
            }
        }
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry exists") += v;
                continue;
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix::new(n_rows, n_cols, row_ptr, col_idx, values)
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(d: &DenseMatrix) -> Self {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for row in d.row_iter() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        if d.rows() == 0 {
            row_ptr = vec![0];
        }
        CsrMatrix { n_rows: d.rows(), n_cols: d.cols(), row_ptr, col_idx, values }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for (j, v) in self.row_entries(i) {
                out[(i, j)] = v;
            }
        }
        out
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices stored in row `i`.
    pub fn row_cols(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn row_values(&self, i: usize) -> &[f64] {
        &self.values[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row_cols(i).iter().copied().zip(self.row_values(i).iter().copied())
    }

    /// Stored value at `(i, j)`, or 0.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let cols = self.row_cols(i);
        match cols.binary_search(&j) {
            Ok(pos) => self.row_values(i)[pos],
            Err(_) => 0.0,
        }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.row_cols(i).binary_search(&j).is_ok()
    }
}

/// Sparse-dense product `s · d`.
pub fn spmm(s: &CsrMatrix, d: &DenseMatrix) -> Result<DenseMatrix> {
    if s.n_cols != d.rows() {
        return Err(Error::shape(
            "spmm",
            format!("{}x{} sparse times {}x{} dense", s.n_rows, s.n_cols, d.rows(), d.cols()),
        ));
    }
    let mut out = DenseMatrix::zeros(s.n_rows, d.cols());
    if d.cols() == 0 {
        return Ok(out);
    }
    let kernel = |(i, out_row): (usize, &mut [f64])| {
        for (j, v) in s.row_entries(i) {
            axpy(v, d.row(j), out_row);
        }
    };
    if s.n_rows >= PAR_MIN_ROWS {
        out.data.par_chunks_mut(d.cols()).enumerate().for_each(kernel);
    } else {
        out.data.chunks_mut(d.cols()).enumerate().for_each(kernel);
    }
    Ok(out)
}

/// Row-wise softmax with the row maximum subtracted first.
pub fn softmax_rows(d: &DenseMatrix) -> DenseMatrix {
    let mut out = d.clone();
    for i in 0..out.rows() {
        softmax_in_place(out.row_mut(i));
    }
    out
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// A fitted principal-component projection.
#[derive(Debug, Clone)]
pub struct Pca {
    mean: Vec<f64>,
    /// One principal direction per row, `k x d`.
    components: DenseMatrix,
    /// Sample variance (n-1 denominator) along each component, non-increasing.
    variances: Vec<f64>,
}

impl Pca {
    /// Fits the top-`k` directions from the eigendecomposition of the sample
    /// covariance. Eigenvalue ties are ordered by the lexicographically
    /// smaller eigenvector; each eigenvector's sign is fixed so its first
    /// non-negligible entry is positive.
    pub fn fit(d: &DenseMatrix, k: usize) -> Result<Pca> {
        let (n, dim) = d.shape();
        if k > dim {
            return Err(Error::InvalidArgument(format!("PCA target dimension {k} exceeds {dim} columns")));
        }
        if n < 2 {
            return Err(Error::InvalidArgument(format!("PCA needs at least 2 rows, got {n}")));
        }
        let mut mean = vec![0.0; dim];
        for row in d.row_iter() {
            axpy(1.0, row, &mut mean);
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);

        let mut centered = d.clone();
        for i in 0..n {
            for (v, m) in centered.row_mut(i).iter_mut().zip(&mean) {
                *v -= m;
            }
        }
        let mut cov = matmul_tn(&centered, &centered)?;
        cov.scale_in_place(1.0 / (n as f64 - 1.0));
        // symmetrise away rounding noise before the eigensolver sees it
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (cov[(i, j)] + cov[(j, i)]);
                cov[(i, j)] = avg;
                cov[(j, i)] = avg;
            }
        }

        let eig = SymmetricEigen::new(DMatrix::from_row_slice(dim, dim, cov.data()));
        let mut pairs: Vec<(f64, Vec<f64>)> = (0..dim)
            .map(|c| {
                let mut v: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
                if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-12) {
                    if first < 0.0 {
                        v.iter_mut().for_each(|x| *x = -*x);
                    }
                }
                (eig.eigenvalues[c].max(0.0), v)
            })
            .collect();
        let scale = pairs.iter().map(|p| p.0).fold(0.0, f64::max).max(1.0);
        let tie_tol = 1e-12 * scale;
        pairs.sort_by(|a, b| {
            if (a.0 - b.0).abs() <= tie_tol {
                a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal)
            } else {
                b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal)
            }
        });
        pairs.truncate(k);

        let variances = pairs.iter().map(|p| p.0).collect();
        let mut comp = Vec::with_capacity(k * dim);
        for (_, v) in &pairs {
            comp.extend_from_slice(v);
        }
        Ok(Pca { mean, components: DenseMatrix::from_vec(k, dim, comp)?, variances })
    }

    pub fn transform(&self, d: &DenseMatrix) -> Result<DenseMatrix> {
        if d.cols() != self.mean.len() {
            return Err(Error::shape(
                "Pca::transform",
                format!("fitted on {} columns, got {}", self.mean.len(), d.cols()),
            ));
        }
        let mut centered = d.clone();
        for i in 0..centered.rows() {
            for (v, m) in centered.row_mut(i).iter_mut().zip(&self.mean) {
                *v -= m;
            }
        }
        matmul_nt(&centered, &self.components)
    }

    pub fn components(&self) -> &DenseMatrix {
        &self.components
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }
}

/// Centres `d` and projects it onto its top-`k` principal directions.
pub fn pca_project(d: &DenseMatrix, k: usize) -> Result<DenseMatrix> {
    Pca::fit(d, k)?.transform(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Prng;

    fn random_dense(rng: &mut Prng, r: usize, c: usize) -> DenseMatrix {
        DenseMatrix::from_fn(r, c, |_, _| rng.uniform(-1.0, 1.0))
    }

    fn naive_matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| {
            (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum()
        })
    }

    #[test]
    fn spmm_identity_and_zero() {
        let d = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(spmm(&CsrMatrix::identity(3), &d).unwrap(), d);
        let zero = CsrMatrix::from_triplets(3, 3, &[]).unwrap();
        assert_eq!(spmm(&zero, &d).unwrap(), DenseMatrix::zeros(3, 2));
    }

    #[test]
    fn spmm_matches_dense_oracle_seed7() {
        let mut rng = Prng::new(7);
        let mut trip = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                if rng.next_f64() < 0.5 {
                    trip.push((i, j, rng.uniform(-1.0, 1.0)));
                }
            }
        }
        let s = CsrMatrix::from_triplets(4, 4, &trip).unwrap();
        let d = random_dense(&mut rng, 4, 3);
        let got = spmm(&s, &d).unwrap();
        let want = naive_matmul(&s.to_dense(), &d);
        assert!(got.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn spmm_dimension_mismatch() {
        let err = spmm(&CsrMatrix::identity(3), &DenseMatrix::zeros(2, 2)).unwrap_err();
        assert!(matches!(err, Error::Shape { .. }));
    }

    #[test]
    fn matmul_basics() {
        let mut rng = Prng::new(1);
        let a = random_dense(&mut rng, 3, 4);
        assert!(matmul(&a, &DenseMatrix::identity(4)).unwrap().max_abs_diff(&a) < 1e-15);
        let two = DenseMatrix::from_vec(1, 1, vec![2.0]).unwrap();
        let three = DenseMatrix::from_vec(1, 1, vec![3.0]).unwrap();
        assert_eq!(matmul(&two, &three).unwrap()[(0, 0)], 6.0);
        assert!(matmul(&a, &a).is_err());
    }

    #[test]
    fn matmul_transpose_identity() {
        let mut rng = Prng::new(11);
        let a = random_dense(&mut rng, 3, 4);
        let b = random_dense(&mut rng, 4, 2);
        let lhs = matmul(&a, &b).unwrap().transpose();
        let rhs = matmul(&b.transpose(), &a.transpose()).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn transposed_products_agree_with_explicit_transpose() {
        let mut rng = Prng::new(5);
        let a = random_dense(&mut rng, 70, 6);
        let b = random_dense(&mut rng, 70, 3);
        let c = random_dense(&mut rng, 9, 6);
        let tn = matmul_tn(&a, &b).unwrap();
        assert!(tn.max_abs_diff(&naive_matmul(&a.transpose(), &b)) < 1e-12);
        let nt = matmul_nt(&a, &c).unwrap();
        assert!(nt.max_abs_diff(&naive_matmul(&a, &c.transpose())) < 1e-12);
    }

    #[test]
    fn softmax_cases() {
        let m = DenseMatrix::from_rows(&[vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 3.0]]).unwrap();
        let s = softmax_rows(&m);
        for j in 0..3 {
            assert!((s[(0, j)] - 1.0 / 3.0).abs() < 1e-15);
        }
        let denom: f64 = [1.0f64, 2.0, 3.0].iter().map(|x| x.exp()).sum();
        for j in 0..3 {
            let want = ((j + 1) as f64).exp() / denom;
            assert!((s[(1, j)] - want).abs() < 1e-15);
        }
        let shifted = DenseMatrix::from_rows(&[vec![100.0, 102.5, 99.0]]).unwrap();
        let base = DenseMatrix::from_rows(&[vec![0.0, 2.5, -1.0]]).unwrap();
        assert!(softmax_rows(&shifted).max_abs_diff(&softmax_rows(&base)) < 1e-12);
    }

    #[test]
    fn csr_validation() {
        assert!(CsrMatrix::new(2, 2, vec![0, 1, 2], vec![1, 0], vec![1.0, 1.0]).is_ok());
        assert!(CsrMatrix::new(2, 2, vec![0, 2, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::new(2, 2, vec![0, 1, 2], vec![1, 2], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::new(2, 2, vec![1, 1, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        let s = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, 2.0)]).unwrap();
        assert_eq!(s.get(0, 1), 3.0);
        assert_eq!(s.nnz(), 1);
    }

    #[test]
    fn pca_collinear_captures_all_variance() {
        let d = DenseMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 2.0],
            vec![2.0, 4.0],
            vec![-3.0, -6.0],
        ])
        .unwrap();
        let pca = Pca::fit(&d, 2).unwrap();
        let total: f64 = pca.variances().iter().sum();
        assert!((pca.variances()[0] / total - 1.0).abs() < 1e-12);
        assert!(Pca::fit(&d, 3).is_err());
        assert!(Pca::fit(&DenseMatrix::zeros(1, 2), 1).is_err());
    }

    #[test]
    fn pca_axis_aligned_selects_coordinates() {
        // centred, variance 9 on axis 2, 4 on axis 0, 0 on axis 1
        let d = DenseMatrix::from_rows(&[
            vec![2.0, 0.0, 0.0],
            vec![-2.0, 0.0, 0.0],
            vec![0.0, 0.0, 3.0],
            vec![0.0, 0.0, -3.0],
        ])
        .unwrap();
        let p = pca_project(&d, 2).unwrap();
        for i in 0..4 {
            assert!((p[(i, 0)] - d[(i, 2)]).abs() < 1e-12);
            assert!((p[(i, 1)] - d[(i, 0)]).abs() < 1e-12);
        }
    }
}
