//! Dense row-major matrices, row normalization and cosine similarity.
//!
//! All arithmetic is `f64`. Row reductions sum left to right; parallel
//! paths only split work across rows, never within a sum.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Norm at or below which a row is treated as zero.
pub const MIN_ROW_NORM: f64 = 1e-12;

/// Dense row-major `f64` matrix with finite entries and non-zero shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Raw feature rows (encoder outputs or inputs).
pub type FeatureMatrix = Matrix;

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty);
        }
        if data.len() != rows * cols {
            return Err(Error::BadShape { rows, cols, len: data.len() });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: pos / cols, col: pos % cols });
        }
        Ok(Self { rows, cols, data })
    }

    /// Zero matrix. Panics on an empty shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix shape");
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimMismatch { left: cols, right: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Builds a matrix entry by entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        let mut out = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        Self { rows: self.cols, cols: self.rows, data: out }
    }

    /// `self * other`, each output entry summed left to right over the
    /// shared dimension.
    pub fn matmul(&self, other: &Matrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimMismatch { left: self.cols, right: other.rows });
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let rows = par::map_indexed(n, |i| {
            let a = self.row(i);
            let mut out = vec![0.0; m];
            for (j, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (p, &a_ip) in a.iter().enumerate().take(k) {
                    acc += a_ip * other.data[p * m + j];
                }
                *o = acc;
            }
            out
        });
        Ok(Self { rows: n, cols: m, data: rows.concat() })
    }

    /// `self^T * other` without materializing the transpose.
    pub fn t_matmul(&self, other: &Matrix) -> Result<Self> {
        self.transpose().matmul(other)
    }

    /// Rows picked by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        assert!(!idx.is_empty(), "empty row selection");
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self { rows: idx.len(), cols: self.cols, data }
    }

    /// Square sub-matrix `self[idx][idx]`.
    pub fn select_square(&self, idx: &[usize]) -> Self {
        assert!(!idx.is_empty(), "empty selection");
        let n = idx.len();
        let mut data = Vec::with_capacity(n * n);
        for &i in idx {
            for &j in idx {
                data.push(self.get(i, j));
            }
        }
        Self { rows: n, cols: n, data }
    }

    /// Elementwise `self += other`.
    pub fn add_assign(&mut self, other: &Matrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for a in &mut self.data {
            *a *= c;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

/// Left-to-right dot product.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Scales every row to unit Euclidean norm.
pub fn l2_normalize_rows(x: &FeatureMatrix) -> Result<FeatureMatrix> {
    let rows = par::try_map_indexed(x.rows(), |i| {
        let row = x.row(i);
        let n = norm(row);
        if n.is_nan() || n <= MIN_ROW_NORM {
            return Err(Error::ZeroRow(i));
        }
        Ok(row.iter().map(|v| v / n).collect::<Vec<_>>())
    })?;
    Ok(Matrix { rows: x.rows, cols: x.cols, data: rows.concat() })
}

/// Cosine similarities between image rows (`v`) and text rows (`t`).
/// Row `i`, column `j` is `<v_i, t_j>`; inputs must already be unit-normalized.
pub fn cosine_similarity(v: &FeatureMatrix, t: &FeatureMatrix) -> Result<SimilarityMatrix> {
    if v.cols() != t.cols() {
        return Err(Error::DimMismatch { left: v.cols(), right: t.cols() });
    }
    let rows = par::map_indexed(v.rows(), |i| {
        let vi = v.row(i);
        (0..t.rows()).map(|j| dot(vi, t.row(j))).collect::<Vec<_>>()
    });
    Ok(SimilarityMatrix(Matrix { rows: v.rows(), cols: t.rows(), data: rows.concat() }))
}

/// Image-by-text similarity scores; row `i` is image `V_i`, column `j` is text `T_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix(Matrix);

impl SimilarityMatrix {
    pub fn new(m: Matrix) -> Self {
        Self(m)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Matrix::from_rows(rows).map(Self)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }
}

impl Deref for SimilarityMatrix {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.0
    }
}

impl From<Matrix> for SimilarityMatrix {
    fn from(m: Matrix) -> Self {
        Self(m)
    }
}

/// Continuous relevance labels: square, entries in `[-1, 1]`, unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceMatrix(Matrix);

impl RelevanceMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
        }
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let v = m.get(i, j);
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::OutOfRange { row: i, col: j, value: v });
                }
            }
            if m.get(i, i) != 1.0 {
                return Err(Error::BadDiagonal(i));
            }
        }
        Ok(Self(m))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// Binary labels: 1 on the diagonal, 0 elsewhere.
    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n))
    }

    pub fn size(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Relevance among a subset of items (e.g. a training batch).
    pub fn select(&self, idx: &[usize]) -> Self {
        Self(self.0.select_square(idx))
    }
}

impl Deref for RelevanceMatrix {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.0
    }
}
