//! Small dense linear algebra: row-major matrices, LU with partial pivoting,
//! one-sided Jacobi SVD and the subspace helpers built on it.

use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular (pivot {pivot} in column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
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
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from row slices. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix { rows: r, cols: c, data: rows.iter().flatten().copied().collect() }
    }

    pub fn from_columns(rows: usize, cols: &[Vec<T>]) -> Self {
        assert!(cols.iter().all(|c| c.len() == rows), "column length mismatch");
        Self::from_fn(rows, cols.len(), |i, j| cols[j][i])
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

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn columns(&self) -> Vec<Vec<T>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + other[(i, j)])
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - other[(i, j)])
    }

    pub fn scale(&self, s: T) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| v * s).collect() }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).fold(T::zero(), |s, i| s + self[(i, j)].abs()))
            .fold(T::zero(), T::max)
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().fold(T::zero(), |s, &v| s + v * v).sqrt()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

/// LU factorization `P A = L U` with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    sign: T,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &Matrix<T>) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::Shape(format!("LU needs a square matrix, got {}x{}", a.rows, a.cols)));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot == T::zero() || !pivot.is_finite() {
                return Err(LinalgError::Singular { column: k, pivot: pivot.to_f64().unwrap_or(f64::NAN) });
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f != T::zero() {
                    for j in k + 1..n {
                        lu[(i, j)] = lu[(i, j)] - f * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Lu { lu, perm, sign })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows;
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s = s - self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s = s - self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.lu.rows;
        let cols: Vec<Vec<T>> = (0..n)
            .map(|j| {
                let mut e = vec![T::zero(); n];
                e[j] = T::one();
                self.solve(&e)
            })
            .collect();
        Matrix::from_columns(n, &cols)
    }

    pub fn determinant(&self) -> T {
        (0..self.lu.rows).fold(self.sign, |d, i| d * self.lu[(i, i)])
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>, LinalgError> {
    Ok(Lu::factor(a)?.solve(b))
}

/// 1-norm condition number `|A|_1 |A^-1|_1`; infinite for singular input.
pub fn condition_number<T: Scalar>(a: &Matrix<T>) -> T {
    match Lu::factor(a) {
        Ok(lu) => a.norm1() * lu.inverse().norm1(),
        Err(_) => T::infinity(),
    }
}

/// Thin singular value decomposition `A = U diag(s) V^T` of an m×n matrix.
///
/// `v` is always n×n and `sigma` has n entries (zeros for rank-deficient
/// directions), so the kernel can be read off the columns of `v`.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: Matrix<T>,
    pub sigma: Vec<T>,
    pub v: Matrix<T>,
}

/// One-sided Jacobi SVD. Singular values are sorted in decreasing order.
pub fn svd<T: Scalar>(a: &Matrix<T>) -> Svd<T> {
    let (m, n) = (a.rows, a.cols);
    let mut w = a.clone();
    let mut v = Matrix::<T>::identity(n);
    let eps = T::epsilon();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for i in 0..m {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    alpha = alpha + x * x;
                    beta = beta + y * y;
                    gamma = gamma + x * y;
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * x - s * y;
                    w[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<T> = (0..n)
        .map(|j| (0..m).fold(T::zero(), |s, i| s + w[(i, j)] * w[(i, j)]).sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));
    let sigma: Vec<T> = order.iter().map(|&j| norms[j]).collect();
    let v_sorted = Matrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    let u = Matrix::from_fn(m, n, |i, k| {
        let s = norms[order[k]];
        if s > T::zero() {
            w[(i, order[k])] / s
        } else {
            T::zero()
        }
    });
    Svd { u, sigma, v: v_sorted }
}

/// Orthonormal basis of the kernel of `a`, using a singular value threshold
/// relative to the largest one.
pub fn null_space<T: Scalar>(a: &Matrix<T>, rel_tol: T) -> Vec<Vec<T>> {
    let n = a.cols;
    if a.rows == 0 {
        return Matrix::<T>::identity(n).columns();
    }
    let d = svd(a);
    let smax = d.sigma.first().copied().unwrap_or(T::zero());
    (0..n)
        .filter(|&j| smax == T::zero() || d.sigma[j] <= rel_tol * smax)
        .map(|j| d.v.column(j))
        .collect()
}

/// Orthonormal basis of the span of `vectors` (each of length `dim`), with
/// a threshold relative to the largest singular value. Also returns all
/// singular values for rank diagnostics.
pub fn orthonormal_span<T: Scalar>(dim: usize, vectors: &[Vec<T>], rel_tol: T) -> (Vec<Vec<T>>, Vec<T>) {
    if vectors.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let a = Matrix::from_columns(dim, vectors);
    let d = svd(&a);
    let smax = d.sigma[0];
    let basis = (0..d.sigma.len())
        .filter(|&j| smax > T::zero() && d.sigma[j] > rel_tol * smax)
        .map(|j| d.u.column(j))
        .collect();
    (basis, d.sigma)
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_with_pivoting() {
        let a = Matrix::<f64>::from_rows(&[vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]]);
        let x = solve(&a, &[3.0, 2.0, 4.0]).unwrap();
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip([3.0, 2.0, 4.0]) {
            assert!((ri - bi).abs() < 1e-14);
        }
        let lu = Lu::factor(&a).unwrap();
        assert!((lu.determinant() - (-5.0)).abs() < 1e-12);
    }

    #[test]
    fn singular_is_reported() {
        let a = Matrix::<f64>::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(Lu::factor(&a), Err(LinalgError::Singular { .. })));
        assert!(condition_number(&a).is_infinite());
    }

    #[test]
    fn svd_reconstructs_and_finds_kernel() {
        let a = Matrix::<f64>::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]);
        let d = svd(&a);
        assert!((d.sigma[0] - (70.0f64).sqrt()).abs() < 1e-12);
        assert!(d.sigma[1].abs() < 1e-12 && d.sigma[2].abs() < 1e-12);
        let ker = null_space(&a, 1e-9);
        assert_eq!(ker.len(), 2);
        for k in &ker {
            assert!(norm(&a.mul_vec(k)) < 1e-12);
        }
    }

    #[test]
    fn svd_works_in_single_precision() {
        let a = Matrix::<f32>::from_rows(&[vec![3.0, 0.0], vec![0.0, -2.0]]);
        let d = svd(&a);
        assert!((d.sigma[0] - 3.0).abs() < 1e-6);
        assert!((d.sigma[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn span_drops_dependent_vectors() {
        let (basis, _) = orthonormal_span(3, &[vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0], vec![0.0, 1.0, 1.0]], 1e-9);
        assert_eq!(basis.len(), 2);
    }
}
