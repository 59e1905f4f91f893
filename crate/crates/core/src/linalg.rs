//! Small dense linear algebra: row-major matrices, Householder least squares
//! and one-sided Jacobi singular values.

use std::ops::{Index, IndexMut};

use crate::scalar::{dot, Real};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data. Panics if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major buffer has wrong length");
        Self { rows, cols, data }
    }

    /// Builds a matrix from a slice of equally sized rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self * v`
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows];
        self.mul_vec_into(v, &mut out);
        out
    }

    pub fn mul_vec_into(&self, v: &[T], out: &mut [T]) {
        assert_eq!(v.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), v);
        }
    }

    /// `selfᵀ * v`
    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        self.tr_mul_vec_into(v, &mut out);
        out
    }

    pub fn tr_mul_vec_into(&self, v: &[T], out: &mut [T]) {
        assert_eq!(v.len(), self.rows);
        assert_eq!(out.len(), self.cols);
        out.iter_mut().for_each(|o| *o = T::zero());
        for (i, &vi) in v.iter().enumerate() {
            if vi == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o = *o + a * vi;
            }
        }
    }

    /// Sub-matrix made of the listed rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self { rows: idx.len(), cols: self.cols, data }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |a, &x| a.max(x.abs()))
    }

    /// All singular values in descending order (one-sided Jacobi).
    pub fn singular_values(&self) -> Vec<T> {
        jacobi_singular_values(self)
    }

    /// Least-squares solution of `self * x ≈ b` by Householder QR.
    /// Returns `None` when the matrix has fewer rows than columns or is
    /// numerically rank deficient (|R_kk| ≤ `rank_tol`·max|R_jj|).
    pub fn least_squares(&self, b: &[T], rank_tol: T) -> Option<Vec<T>> {
        HouseholderQr::new(self).solve(b, rank_tol)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Householder QR factorization of a tall matrix, stored column-wise.
pub struct HouseholderQr<T> {
    rows: usize,
    cols: usize,
    // columns of the reduced matrix; below-diagonal parts hold the reflectors
    qr: Vec<Vec<T>>,
    diag: Vec<T>,
}

impl<T: Real> HouseholderQr<T> {
    pub fn new(a: &Matrix<T>) -> Self {
        let (rows, cols) = (a.nrows(), a.ncols());
        let mut qr: Vec<Vec<T>> = (0..cols).map(|j| a.column(j)).collect();
        let mut diag = vec![T::zero(); cols];
        for k in 0..cols.min(rows) {
            let norm = qr[k][k..].iter().fold(T::zero(), |acc, &x| acc.hypot(x));
            if norm == T::zero() {
                diag[k] = T::zero();
                continue;
            }
            let alpha = if qr[k][k] > T::zero() { -norm } else { norm };
            // reflector v = x - alpha e1, stored in place
            qr[k][k] = qr[k][k] - alpha;
            let vnorm2: T = qr[k][k..].iter().map(|&x| x * x).sum();
            let (head, tail) = qr.split_at_mut(k + 1);
            let v = &head[k][k..];
            for col in tail.iter_mut() {
                let s: T = v.iter().zip(&col[k..]).map(|(&a, &b)| a * b).sum();
                let f = (s + s) / vnorm2;
                for (c, &vi) in col[k..].iter_mut().zip(v) {
                    *c = *c - f * vi;
                }
            }
            diag[k] = alpha;
        }
        Self { rows, cols, qr, diag }
    }

    pub fn solve(&self, b: &[T], rank_tol: T) -> Option<Vec<T>> {
        assert_eq!(b.len(), self.rows);
        if self.rows < self.cols {
            return None;
        }
        if !self.is_full_rank(rank_tol) {
            return None;
        }
        let mut y = b.to_vec();
        for k in 0..self.cols {
            let v = &self.qr[k][k..];
            let vnorm2: T = v.iter().map(|&x| x * x).sum();
            if vnorm2 == T::zero() {
                continue;
            }
            let s: T = v.iter().zip(&y[k..]).map(|(&a, &b)| a * b).sum();
            let f = (s + s) / vnorm2;
            for (yi, &vi) in y[k..].iter_mut().zip(v) {
                *yi = *yi - f * vi;
            }
        }
        let mut x = vec![T::zero(); self.cols];
        for k in (0..self.cols).rev() {
            let mut acc = y[k];
            for j in k + 1..self.cols {
                acc = acc - self.qr[j][k] * x[j];
            }
            x[k] = acc / self.diag[k];
        }
        Some(x)
    }
}

impl<T: Real> HouseholderQr<T> {
    /// Solves the normal equations `AᵀA w = g` using the triangular factor.
    pub fn solve_normal(&self, g: &[T], rank_tol: T) -> Option<Vec<T>> {
        assert_eq!(g.len(), self.cols);
        if self.rows < self.cols || !self.is_full_rank(rank_tol) {
            return None;
        }
        let n = self.cols;
        // Rᵀu = g, where R[j][k] (j < k) lives in qr[k][j]
        let mut u = vec![T::zero(); n];
        for k in 0..n {
            let mut acc = g[k];
            for j in 0..k {
                acc = acc - self.qr[k][j] * u[j];
            }
            u[k] = acc / self.diag[k];
        }
        let mut w = vec![T::zero(); n];
        for k in (0..n).rev() {
            let mut acc = u[k];
            for j in k + 1..n {
                acc = acc - self.qr[j][k] * w[j];
            }
            w[k] = acc / self.diag[k];
        }
        Some(w)
    }

    pub fn is_full_rank(&self, rank_tol: T) -> bool {
        let max_r = self.diag.iter().fold(T::zero(), |a, &d| a.max(d.abs()));
        max_r > T::zero() && self.diag.iter().all(|d| d.abs() > rank_tol * max_r)
    }
}

fn jacobi_singular_values<T: Real>(a: &Matrix<T>) -> Vec<T> {
    let tall = if a.nrows() >= a.ncols() { a.clone() } else { a.transpose() };
    let n = tall.ncols();
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| tall.column(j)).collect();
    let eps = T::epsilon();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (xp, xq) = (*x, *y);
                    *x = c * xp - s * xq;
                    *y = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}
