//! Dense column-major linear algebra.
//!
//! The solvers need a small, fixed set of kernels: products, Gram matrices,
//! restricted symmetric positive definite solves, and extreme eigenvalue
//! estimates. All of them live in this module, with no external BLAS, so that
//! a given build produces identical floating point results from run to run on
//! the same platform.
//!
//! Storage order is column-major throughout: entry `(i, j)` of an
//! `rows x cols` matrix lives at `data[i + j * rows]`, which makes columns
//! contiguous. Least-squares models and the block coordinate solvers only
//! ever walk columns, so this is the layout that keeps inner loops straight
//! through memory.
//!
//! Dimension mismatches are programming errors and panic via `assert!`;
//! recoverable numerical failures (a pivot breakdown in a Cholesky solve,
//! a stagnating eigenvalue iteration) are reported through return values.

mod eig;

pub use eig::{max_eigenvalue, min_eigenvalue, EigEstimate};

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("data length {got} does not match {rows} x {cols}")]
    BadShape { rows: usize, cols: usize, got: usize },
    #[error("non-finite entry at position {0}")]
    NonFinite(usize),
    #[error("index {index} out of bounds for dimension {dim}")]
    IndexOutOfBounds { index: usize, dim: usize },
    #[error("indices must be strictly increasing, got {0} then {1}")]
    UnorderedIndices(usize, usize),
    #[error("ragged rows: row 0 has {expected} entries, row {row} has {got}")]
    RaggedRows { row: usize, expected: usize, got: usize },
}

/// Dense real vector. Constructed through [`Vector::new`], which rejects
/// non-finite entries; kernels that have just computed their output use
/// [`Vector::from_raw`] and rely on the solver-level non-finite guards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(data: Vec<f64>) -> Result<Self, LinalgError> {
        match data.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(LinalgError::NonFinite(i)),
            None => Ok(Vector(data)),
        }
    }

    /// Wraps a raw buffer without the finiteness check.
    pub fn from_raw(data: Vec<f64>) -> Self {
        Vector(data)
    }

    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> f64) -> Self {
        Vector((0..n).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.len(), other.len(), "dot: length mismatch");
        dot(&self.0, &other.0)
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `self - other`, elementwise.
    pub fn sub(&self, other: &Vector) -> Vector {
        assert_eq!(self.len(), other.len(), "sub: length mismatch");
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        assert_eq!(self.len(), other.len(), "add: length mismatch");
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|a| c * a).collect())
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &Vector) {
        assert_eq!(self.len(), other.len(), "axpy: length mismatch");
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += c * b;
        }
    }

    /// Number of entries that are not exactly zero.
    pub fn nnz(&self) -> usize {
        self.0.iter().filter(|v| **v != 0.0).count()
    }

    /// Indices of the nonzero entries, ascending.
    pub fn support(&self) -> IndexSet {
        IndexSet(
            self.0
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, _)| i)
                .collect(),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Largest absolute entry, 0 for the empty vector.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Ordered set of indices into a vector: strictly increasing, hence unique.
/// Bounds against the ambient dimension are checked where the set is used.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    /// Validates that `idx` is strictly increasing.
    pub fn new(idx: Vec<usize>) -> Result<Self, LinalgError> {
        for w in idx.windows(2) {
            if w[0] >= w[1] {
                return Err(LinalgError::UnorderedIndices(w[0], w[1]));
            }
        }
        Ok(IndexSet(idx))
    }

    /// Sorts and validates; duplicate entries are an error.
    pub fn from_unsorted(mut idx: Vec<usize>) -> Result<Self, LinalgError> {
        idx.sort_unstable();
        Self::new(idx)
    }

    pub fn empty() -> Self {
        IndexSet(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.0.iter()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn max(&self) -> Option<usize> {
        self.0.last().copied()
    }
}

/// Dense real matrix in column-major order: `data[i + j * rows]` is `(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::BadShape { rows, cols, got: data.len() });
        }
        match data.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(LinalgError::NonFinite(i)),
            None => Ok(DenseMatrix { rows, cols, data }),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diagonal(d: &Vector) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, d[i]);
        }
        m
    }

    /// Builds from row slices; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(LinalgError::RaggedRows { row: i, expected: c, got: row.len() });
            }
        }
        let mut data = vec![0.0; r * c];
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                data[i + j * r] = *v;
            }
        }
        Self::new(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + j * self.rows] = v;
    }

    /// Column `j` as a contiguous slice.
    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        debug_assert!(j < self.cols);
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        debug_assert!(j < self.cols);
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_norm_sq(&self, j: usize) -> f64 {
        let c = self.col(j);
        dot(c, c)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `A x`: accumulates columns, which is the cache-friendly direction for
    /// column-major storage.
    pub fn matvec(&self, x: &Vector) -> Vector {
        assert_eq!(self.cols, x.len(), "matvec: dimension mismatch");
        let mut y = vec![0.0; self.rows];
        for j in 0..self.cols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let col = self.col(j);
            for (yi, aij) in y.iter_mut().zip(col) {
                *yi += aij * xj;
            }
        }
        Vector(y)
    }

    /// `A^T x`: one dot product per column.
    pub fn matvec_t(&self, x: &Vector) -> Vector {
        assert_eq!(self.rows, x.len(), "matvec_t: dimension mismatch");
        Vector((0..self.cols).map(|j| dot(self.col(j), &x.0)).collect())
    }

    /// Gram matrix `A^T A`. The upper triangle is computed once and mirrored,
    /// so the result is exactly symmetric.
    pub fn gram(&self) -> DenseMatrix {
        let n = self.cols;
        let mut g = DenseMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = dot(self.col(i), self.col(j));
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// The square submatrix `M[S, S]`.
    pub fn submatrix(&self, s: &IndexSet) -> DenseMatrix {
        if let Some(mx) = s.max() {
            assert!(mx < self.rows && mx < self.cols, "submatrix: index out of bounds");
        }
        let k = s.len();
        let mut sub = DenseMatrix::zeros(k, k);
        for (jj, &j) in s.iter().enumerate() {
            for (ii, &i) in s.iter().enumerate() {
                sub.set(ii, jj, self.get(i, j));
            }
        }
        sub
    }

    /// Largest absolute column sum. For symmetric matrices this is the
    /// Gershgorin-style bound on the spectral radius used by the eigenvalue
    /// routines.
    pub fn max_abs_col_sum(&self) -> f64 {
        (0..self.cols)
            .map(|j| self.col(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute asymmetry `|M_ij - M_ji|`; zero for exactly symmetric
    /// matrices.
    pub fn asymmetry(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0f64;
        for j in 0..self.cols {
            for i in 0..j {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Pivot breakdown inside a Cholesky factorization: the matrix is not
/// positive definite to working precision. `pivot` is the failing column in
/// the (sub)matrix that was factored.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Singular {
    pub pivot: usize,
}

/// Relative pivot floor for the SPD solves: a diagonal pivot is treated as
/// zero once it falls below `1e-12 * max_diagonal`.
pub const SPD_PIVOT_RTOL: f64 = 1e-12;

/// Lower-triangular Cholesky factor of a symmetric matrix, or [`Singular`]
/// when a pivot drops below the relative floor.
fn cholesky(m: &DenseMatrix) -> Result<DenseMatrix, Singular> {
    assert!(m.is_square(), "cholesky: matrix must be square");
    let n = m.rows;
    let max_diag = (0..n).map(|i| m.get(i, i)).fold(0.0, f64::max);
    let floor = SPD_PIVOT_RTOL * max_diag.max(0.0);
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m.get(j, j);
        for p in 0..j {
            let v = l.get(j, p);
            d -= v * v;
        }
        if !(d > floor) {
            return Err(Singular { pivot: j });
        }
        let dj = d.sqrt();
        l.set(j, j, dj);
        for i in j + 1..n {
            let mut v = m.get(i, j);
            for p in 0..j {
                v -= l.get(i, p) * l.get(j, p);
            }
            l.set(i, j, v / dj);
        }
    }
    Ok(l)
}

/// Solves `M v = r` for symmetric positive definite `M` via Cholesky.
pub fn solve_spd(m: &DenseMatrix, r: &Vector) -> Result<Vector, Singular> {
    assert_eq!(m.rows, r.len(), "solve_spd: dimension mismatch");
    let l = cholesky(m)?;
    let n = m.rows;
    // forward: L y = r
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut v = r[i];
        for p in 0..i {
            v -= l.get(i, p) * y[p];
        }
        y[i] = v / l.get(i, i);
    }
    // backward: L^T v = y
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = y[i];
        for p in i + 1..n {
            v -= l.get(p, i) * x[p];
        }
        x[i] = v / l.get(i, i);
    }
    Ok(Vector(x))
}

/// Solves the restriction `M[S, S] v = r` where `r` holds the entries indexed
/// by `S` (so `r.len() == S.len()`). The returned vector is indexed the same
/// way. A pivot breakdown means the restricted matrix is singular to working
/// precision and the caller should fall back (for the Newton step: skip it).
pub fn solve_spd_restricted(
    m: &DenseMatrix,
    s: &IndexSet,
    r: &Vector,
) -> Result<Vector, Singular> {
    assert!(m.is_square(), "solve_spd_restricted: matrix must be square");
    assert_eq!(s.len(), r.len(), "solve_spd_restricted: rhs does not match index set");
    if let Some(mx) = s.max() {
        assert!(mx < m.rows, "solve_spd_restricted: index {mx} out of bounds");
    }
    if s.is_empty() {
        return Ok(Vector::zeros(0));
    }
    solve_spd(&m.submatrix(s), r)
}

/// Certifies `M + shift * I` positive semidefinite (up to the Cholesky pivot
/// floor) by attempting the factorization. Success is a sound certificate of
/// `lambda_min(M) >= -shift` modulo roundoff of order `n * eps * ||M||`;
/// failure only means the certificate could not be produced.
pub fn psd_certificate(m: &DenseMatrix, shift: f64) -> bool {
    assert!(m.is_square());
    let n = m.rows;
    let mut shifted = m.clone();
    for i in 0..n {
        shifted.set(i, i, shifted.get(i, i) + shift);
    }
    cholesky(&shifted).is_ok()
}
