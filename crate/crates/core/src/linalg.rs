//! Small dense matrix numerics.
//!
//! Two carriers live here: [`SymMatrix`], a packed symmetric matrix whose
//! symmetry is structural, and [`Matrix`], a plain row-major rectangular
//! matrix used for state-space blocks. The symmetric eigensolver is a cyclic
//! Jacobi iteration; every matrix in this crate has order well below 20, so
//! there is no need for anything heavier.

use std::fmt;

use thiserror::Error;

/// Errors raised by matrix construction and spectral queries.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix order must be at least 1")]
    EmptyMatrix,
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("ragged or mis-sized input: expected {expected} entries, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

/// A real symmetric matrix stored as its packed lower triangle.
///
/// `get(i, j)` and `get(j, i)` read the same storage cell, so symmetry can
/// never drift. All entries are finite.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    order: usize,
    packed: Vec<f64>,
}

impl SymMatrix {
    /// Zero matrix of the given order. Panics if `order == 0`.
    pub fn zeros(order: usize) -> Self {
        assert!(order >= 1, "SymMatrix order must be at least 1");
        Self {
            order,
            packed: vec![0.0; order * (order + 1) / 2],
        }
    }

    pub fn identity(order: usize) -> Self {
        let mut s = Self::zeros(order);
        for i in 0..order {
            s.packed[packed_index(i, i)] = 1.0;
        }
        s
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(LinalgError::EmptyMatrix);
        }
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    /// Builds the matrix by evaluating `f(i, j)` on the lower triangle (`i >= j`).
    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if order == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        let mut packed = Vec::with_capacity(order * (order + 1) / 2);
        for i in 0..order {
            for j in 0..=i {
                let v = f(i, j);
                if !v.is_finite() {
                    return Err(LinalgError::NonFinite { row: i, col: j });
                }
                packed.push(v);
            }
        }
        Ok(Self { order, packed })
    }

    /// Builds from full rows; the input must be exactly symmetric.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        for r in rows {
            if r.as_ref().len() != n {
                return Err(LinalgError::Shape {
                    expected: n,
                    found: r.as_ref().len(),
                });
            }
        }
        for i in 0..n {
            for j in 0..i {
                if rows[i].as_ref()[j] != rows[j].as_ref()[i] {
                    return Err(LinalgError::NotSymmetric { row: i, col: j });
                }
            }
        }
        Self::from_fn(n, |i, j| rows[i].as_ref()[j])
    }

    /// Builds from a packed lower triangle in row order: `(0,0), (1,0), (1,1), (2,0), ...`.
    pub fn from_lower(order: usize, packed: Vec<f64>) -> Result<Self> {
        if order == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        let expected = order * (order + 1) / 2;
        if packed.len() != expected {
            return Err(LinalgError::Shape {
                expected,
                found: packed.len(),
            });
        }
        Self::from_fn(order, |i, j| packed[packed_index(i, j)])
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.order && j < self.order, "index out of bounds");
        self.packed[packed_index(i, j)]
    }

    /// Packed lower triangle in row order.
    pub fn packed(&self) -> &[f64] {
        &self.packed
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.order)
            .map(|i| (0..self.order).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.order).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.order {
            for j in 0..=i {
                let v = self.get(i, j);
                acc += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        acc.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.packed.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            order: self.order,
            packed: self.packed.iter().map(|v| v * s).collect(),
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &SymMatrix, s: f64) -> Result<Self> {
        if self.order != other.order {
            return Err(LinalgError::DimensionMismatch(format!(
                "cannot add order {} and order {}",
                self.order, other.order
            )));
        }
        Ok(Self {
            order: self.order,
            packed: self
                .packed
                .iter()
                .zip(&other.packed)
                .map(|(a, b)| a + s * b)
                .collect(),
        })
    }

    /// `self + s * I`.
    pub fn shift_diagonal(&self, s: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.order {
            out.packed[packed_index(i, i)] += s;
        }
        out
    }

    /// `xᵀ S x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.order, "vector length must match order");
        let mut acc = 0.0;
        for i in 0..self.order {
            acc += self.get(i, i) * x[i] * x[i];
            for j in 0..i {
                acc += 2.0 * self.get(i, j) * x[i] * x[j];
            }
        }
        acc
    }

    /// Principal submatrix on the given (ordered) index set.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Result<Self> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.order) {
            return Err(LinalgError::DimensionMismatch(format!(
                "index {bad} out of range for order {}",
                self.order
            )));
        }
        Self::from_fn(idx.len(), |i, j| self.get(idx[i], idx[j]))
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.order;
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, self.get(i, j));
            }
        }
        m
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymMatrix")
            .field("order", &self.order)
            .field("rows", &self.to_rows())
            .finish()
    }
}

/// Row-major dense rectangular matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.as_ref().len());
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != c {
                return Err(LinalgError::Shape {
                    expected: c,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(LinalgError::NonFinite { row: i, col: j });
                }
                data.push(v);
            }
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    /// Column vector from a slice.
    pub fn column(values: &[f64]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        self.data[i * self.cols + j] = v;
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.cols.max(1))
            .take(self.rows)
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Matrix, s: f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(LinalgError::DimensionMismatch(format!(
                "cannot add {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + s * b)
                .collect(),
        })
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                rhs.shape()
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// `[self rhs]`.
    pub fn hstack(&self, rhs: &Matrix) -> Result<Self> {
        if self.rows != rhs.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "hstack of {:?} and {:?}",
                self.shape(),
                rhs.shape()
            )));
        }
        let mut out = Self::zeros(self.rows, self.cols + rhs.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j));
            }
            for j in 0..rhs.cols {
                out.set(i, self.cols + j, rhs.get(i, j));
            }
        }
        Ok(out)
    }

    /// `[self; rhs]`.
    pub fn vstack(&self, rhs: &Matrix) -> Result<Self> {
        if self.cols != rhs.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "vstack of {:?} and {:?}",
                self.shape(),
                rhs.shape()
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&rhs.data);
        Ok(Self {
            rows: self.rows + rhs.rows,
            cols: self.cols,
            data,
        })
    }

    /// Congruence `Xᵀ S X`, symmetric by construction.
    pub fn congruence(&self, s: &SymMatrix) -> Result<SymMatrix> {
        if s.order() != self.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "congruence of order-{} matrix by {:?}",
                s.order(),
                self.shape()
            )));
        }
        let sx = s.to_dense().matmul(self)?;
        SymMatrix::from_fn(self.cols, |i, j| {
            (0..self.rows).map(|k| self.get(k, i) * sx.get(k, j)).sum()
        })
    }
}

/// Stopping rule for the Jacobi eigensolver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiOptions {
    /// Stop once the off-diagonal Frobenius norm is at most `rel_tol * ‖S‖_F`.
    pub rel_tol: f64,
    pub max_sweeps: usize,
}

impl Default for JacobiOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_sweeps: 100,
        }
    }
}

/// Eigenvalues sorted ascending; column `i` of `eigenvectors` pairs with eigenvalue `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl EigenResult {
    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        (0..self.eigenvectors.rows())
            .map(|r| self.eigenvectors.get(r, i))
            .collect()
    }
}

/// An eigenvalue with a unit eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

pub fn eig_sym(s: &SymMatrix) -> EigenResult {
    eig_sym_with(s, JacobiOptions::default())
}

/// Cyclic Jacobi rotations on a dense working copy.
pub fn eig_sym_with(s: &SymMatrix, opts: JacobiOptions) -> EigenResult {
    let n = s.order();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = s.get(i, j);
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let threshold = opts.rel_tol * s.frobenius_norm();
    let off_norm = |a: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += a[i * n + j] * a[i * n + j];
                }
            }
        }
        acc.sqrt()
    };

    for _ in 0..opts.max_sweeps {
        if off_norm(&a) <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - sn * vkq;
                    v[k * n + q] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let eigenvalues = order.iter().map(|&i| a[i * n + i]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors.set(r, col, v[r * n + src]);
        }
    }
    EigenResult {
        eigenvalues,
        eigenvectors,
    }
}

/// Largest eigenvalue and its unit eigenvector.
pub fn max_eigenvalue(s: &SymMatrix) -> EigenPair {
    let eig = eig_sym(s);
    let last = eig.eigenvalues.len() - 1;
    EigenPair {
        value: eig.eigenvalues[last],
        vector: eig.eigenvector(last),
    }
}

/// Smallest eigenvalue and its unit eigenvector.
pub fn min_eigenvalue(s: &SymMatrix) -> EigenPair {
    let eig = eig_sym(s);
    EigenPair {
        value: eig.eigenvalues[0],
        vector: eig.eigenvector(0),
    }
}

/// `true` iff the largest eigenvalue of `s` is at most `slack`.
pub fn is_neg_semidef(s: &SymMatrix, slack: f64) -> bool {
    max_eigenvalue(s).value <= slack
}

/// Spectral condition number of a positive definite matrix.
pub fn cond_spd(s: &SymMatrix) -> Result<f64> {
    let eig = eig_sym(s);
    let lo = eig.eigenvalues[0];
    let hi = eig.eigenvalues[eig.eigenvalues.len() - 1];
    if lo <= 0.0 {
        return Err(LinalgError::NotPositiveDefinite { min_eigenvalue: lo });
    }
    Ok(hi / lo)
}
