//! Small dense real linear algebra: vectors, matrices, orthonormalization,
//! subspace projection, orthogonal complements, and symmetric solves.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Default relative tolerance used when dropping dependent vectors; inputs are
/// O(1) frames from well-scaled immersions.
pub const RANK_TOL: f64 = 1e-10;

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn scale<T: Real>(a: &[T], c: T) -> Vec<T> {
    a.iter().map(|&x| x * c).collect()
}

pub fn add<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// `a += c * b` in place.
pub fn axpy<T: Real>(a: &mut [T], c: T, b: &[T]) {
    for (x, &y) in a.iter_mut().zip(b) {
        *x += c * y;
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            entries: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map(|row| row.len()).unwrap_or(0);
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            entries.extend_from_slice(row);
        }
        Mat {
            rows: r,
            cols: c,
            entries,
        }
    }

    /// Builds a matrix whose `j`-th column is `cols[j]`.
    pub fn from_cols(cols: &[Vec<T>]) -> Self {
        let c = cols.len();
        let r = cols.first().map(|col| col.len()).unwrap_or(0);
        let mut m = Self::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), r, "ragged columns");
            for (i, &x) in col.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        m
    }

    pub fn diagonal(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m.set(i, i, x);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.set(i, j, out.get(i, j) + a * rhs.get(k, j));
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        Mat {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&a| a * c).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|x| x.is_finite())
    }

    pub fn symmetry_residual(&self) -> T {
        let mut r = T::zero();
        for i in 0..self.rows {
            for j in 0..i {
                r = r.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        r
    }
}

/// A subspace of R^n carried by an orthonormal basis.
#[derive(Debug, Clone, Serialize)]
pub struct Subspace<T> {
    ambient_dim: usize,
    basis: Vec<Vec<T>>,
}

impl<T: Real> Subspace<T> {
    /// The zero subspace of R^n.
    pub fn empty(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: Vec::new(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<T>] {
        &self.basis
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.ambient_dim, "projection dimension mismatch");
        let mut out = vec![T::zero(); self.ambient_dim];
        for b in &self.basis {
            axpy(&mut out, dot(v, b), b);
        }
        out
    }

    /// `v` minus its projection.
    pub fn reject(&self, v: &[T]) -> Vec<T> {
        sub(v, &self.project(v))
    }

    /// Coefficients of the projection of `v` in the orthonormal basis.
    pub fn coords(&self, v: &[T]) -> Vec<T> {
        self.basis.iter().map(|b| dot(v, b)).collect()
    }

    /// Reconstructs an ambient vector from basis coefficients.
    pub fn from_coords(&self, c: &[T]) -> Vec<T> {
        assert_eq!(c.len(), self.rank());
        let mut out = vec![T::zero(); self.ambient_dim];
        for (b, &ci) in self.basis.iter().zip(c) {
            axpy(&mut out, ci, b);
        }
        out
    }
}

/// Modified Gram-Schmidt with one re-orthogonalization pass. Vectors whose
/// residual norm falls below `tol` times the largest input norm are dropped,
/// so the returned rank can be less than the input count.
pub fn gram_schmidt<T: Real>(vectors: &[Vec<T>], tol: T) -> Subspace<T> {
    let ambient_dim = vectors.first().map(|v| v.len()).unwrap_or(0);
    let max_norm = vectors
        .iter()
        .fold(T::zero(), |acc, v| acc.max(norm(v)));
    let cutoff = tol * max_norm;
    let mut basis: Vec<Vec<T>> = Vec::new();
    for v in vectors {
        assert_eq!(v.len(), ambient_dim, "mixed ambient dimensions");
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                axpy(&mut w, -c, b);
            }
        }
        let n = norm(&w);
        if n > cutoff && n > T::zero() {
            basis.push(scale(&w, T::one() / n));
        }
    }
    Subspace { ambient_dim, basis }
}

/// Orthonormal basis of the orthogonal complement of `s`, built by
/// orthonormalizing the canonical basis vectors in index order against `s`.
/// Deterministic for a fixed input.
pub fn complement<T: Real>(s: &Subspace<T>) -> Subspace<T> {
    let n = s.ambient_dim;
    let target = n - s.rank();
    let mut basis: Vec<Vec<T>> = Vec::new();
    for axis in 0..n {
        if basis.len() == target {
            break;
        }
        let mut w = vec![T::zero(); n];
        w[axis] = T::one();
        for _ in 0..2 {
            let mut proj = s.project(&w);
            for b in &basis {
                axpy(&mut proj, dot(&w, b), b);
            }
            w = sub(&w, &proj);
        }
        let nw = norm(&w);
        if nw > lit::<T>(RANK_TOL) {
            basis.push(scale(&w, T::one() / nw));
        }
    }
    Subspace {
        ambient_dim: n,
        basis,
    }
}

/// Cholesky factor (lower triangular) of a symmetric positive-definite matrix.
fn cholesky<T: Real>(a: &Mat<T>) -> Result<Mat<T>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch("cholesky of non-square".into()));
    }
    let sym = a.symmetry_residual();
    if sym > lit::<T>(1e-12) * (T::one() + a.max_abs()) {
        return Err(Error::SingularMetric(format!(
            "matrix not symmetric (residual {:.3e})",
            sym.to_f64().unwrap_or(f64::NAN)
        )));
    }
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if sum <= T::zero() {
                    return Err(Error::SingularMetric(format!(
                        "non-positive-definite pivot at index {i}"
                    )));
                }
                l.set(i, i, sum.sqrt());
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Ok(l)
}

/// Solves `A x = b` for symmetric positive-definite `A` via Cholesky.
pub fn solve_sym<T: Real>(a: &Mat<T>, b: &[T]) -> Result<Vec<T>> {
    let l = cholesky(a)?;
    Ok(solve_with_factor(&l, b))
}

/// Pre-factored symmetric solve for repeated right-hand sides.
#[derive(Debug, Clone)]
pub struct SymSolver<T> {
    l: Mat<T>,
}

impl<T: Real> SymSolver<T> {
    pub fn new(a: &Mat<T>) -> Result<Self> {
        Ok(SymSolver { l: cholesky(a)? })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        solve_with_factor(&self.l, b)
    }

    /// Solves for every column of `b`.
    pub fn solve_mat(&self, b: &Mat<T>) -> Mat<T> {
        let cols: Vec<Vec<T>> = (0..b.cols()).map(|j| self.solve(&b.col(j))).collect();
        Mat::from_cols(&cols)
    }

    /// Full inverse (solve against the identity).
    pub fn inverse(&self) -> Mat<T> {
        self.solve_mat(&Mat::identity(self.l.rows()))
    }
}

#[allow(clippy::needless_range_loop)]
fn solve_with_factor<T: Real>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    let n = l.rows();
    assert_eq!(b.len(), n, "solve dimension mismatch");
    // forward: L y = b
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l.get(i, k) * y[k];
        }
        y[i] = sum / l.get(i, i);
    }
    // backward: L^T x = y
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l.get(k, i) * x[k];
        }
        x[i] = sum / l.get(i, i);
    }
    x
}
