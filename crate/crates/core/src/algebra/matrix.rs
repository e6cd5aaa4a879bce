use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Elementary matrix `E^{i,j}` (0-based): a single one at row `i`, column `j`.
    pub fn elementary(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(i, j)] = T::one();
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        check_dim(rows * cols, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            check_dim(c, row.len())?;
            data.extend_from_slice(row);
        }
        Self::from_row_major(r, c, data)
    }

    /// Column matrix from a set of column vectors.
    pub fn from_columns(cols: &[Vec<T>]) -> Result<Self> {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            check_dim(r, col.len())?;
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
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
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[T]) {
        for (i, &v) in col.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        check_dim(self.rows, other.rows)?;
        check_dim(self.cols, other.cols)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dim(self.cols, other.rows)?;
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] = out.data[i * other.cols + j] + a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        check_dim(self.cols, v.len())?;
        let mut out = vec![T::zero(); self.rows];
        self.matvec_into(v, &mut out);
        Ok(out)
    }

    /// Unchecked `out = self * v`; lengths must already match.
    #[inline]
    pub fn matvec_into(&self, v: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        }
    }

    /// Matrix commutator `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::InvalidArgument("commutator needs square matrices".into()));
        }
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Symmetric part `(A + Aᵀ) / 2`.
    pub fn symmetric_part(&self) -> Self {
        let t = self.transpose();
        let half = T::of(0.5);
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&t.data).map(|(&a, &b)| (a + b) * half).collect(),
        }
    }

    /// True iff the symmetric part is negative definite (Cholesky of its negation succeeds).
    pub fn is_negative_definite(&self) -> bool {
        if !self.is_square() || self.rows == 0 {
            return false;
        }
        let neg = self.symmetric_part().scale(-T::one());
        cholesky_succeeds(&neg)
    }

    /// Determinant by LU with partial pivoting.
    pub fn determinant(&self) -> Result<T> {
        if !self.is_square() {
            return Err(Error::InvalidArgument("determinant needs a square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut det = T::one();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].abs().partial_cmp(&a[(j, k)].abs()).unwrap())
                .unwrap();
            if a[(p, k)] == T::zero() {
                return Ok(T::zero());
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                det = -det;
            }
            let pivot = a[(k, k)];
            det = det * pivot;
            for i in k + 1..n {
                let f = a[(i, k)] / pivot;
                for j in k..n {
                    let v = a[(k, j)];
                    a[(i, j)] = a[(i, j)] - f * v;
                }
            }
        }
        Ok(det)
    }

    /// Singular values in descending order (one-sided Jacobi).
    pub fn singular_values(&self) -> Vec<T> {
        // Work on the orientation with fewer columns.
        let a = if self.cols > self.rows { self.transpose() } else { self.clone() };
        let (m, n) = (a.rows, a.cols);
        let mut cols: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
        let tol = T::epsilon();
        for _sweep in 0..60 {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let alpha: T = cols[p].iter().map(|&v| v * v).sum();
                    let beta: T = cols[q].iter().map(|&v| v * v).sum();
                    let gamma: T = cols[p].iter().zip(&cols[q]).map(|(&x, &y)| x * y).sum();
                    if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (T::of(2.0) * gamma);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    for i in 0..m {
                        let x = cols[p][i];
                        let y = cols[q][i];
                        cols[p][i] = c * x - s * y;
                        cols[q][i] = s * x + c * y;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut sv: Vec<T> = cols.iter().map(|c| c.iter().map(|&v| v * v).sum::<T>().sqrt()).collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sv
    }

    /// Spectral norm (largest singular value).
    pub fn operator_norm(&self) -> T {
        self.singular_values().first().copied().unwrap_or_else(T::zero)
    }

    /// Numeric rank: singular values above `rel_tol * σ_max`.
    pub fn rank(&self, rel_tol: T) -> usize {
        let sv = self.singular_values();
        match sv.first() {
            Some(&top) if top > T::zero() => sv.iter().filter(|&&s| s > rel_tol * top).count(),
            _ => 0,
        }
    }
}

fn cholesky_succeeds<T: Scalar>(a: &DenseMatrix<T>) -> bool {
    let n = a.rows;
    let mut l = DenseMatrix::<T>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d = d - l[(j, k)] * l[(j, k)];
        }
        if d <= T::zero() || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    true
}

/// Householder QR of an `n × k` column frame stored row-major in `frame`.
///
/// On return `frame` holds the orthonormal factor `Q` and `r_diag` the diagonal of `R`,
/// with signs chosen so that every `r_diag[i] >= 0`.
pub fn qr_in_place<T: Scalar>(frame: &mut [T], n: usize, k: usize, r_diag: &mut [T]) {
    debug_assert_eq!(frame.len(), n * k);
    // Modified Gram–Schmidt with one re-orthogonalization pass; k ≤ n is small here.
    for j in 0..k {
        for _pass in 0..2 {
            for p in 0..j {
                let mut proj = T::zero();
                for i in 0..n {
                    proj = proj + frame[i * k + p] * frame[i * k + j];
                }
                for i in 0..n {
                    frame[i * k + j] = frame[i * k + j] - proj * frame[i * k + p];
                }
            }
        }
        let mut nrm = T::zero();
        for i in 0..n {
            nrm = nrm + frame[i * k + j] * frame[i * k + j];
        }
        let nrm = nrm.sqrt();
        r_diag[j] = nrm;
        if nrm > T::zero() {
            for i in 0..n {
                frame[i * k + j] = frame[i * k + j] / nrm;
            }
        }
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for DenseMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commutator_of_elementary_matrices() {
        let e12 = DenseMatrix::<f64>::elementary(2, 0, 1);
        let e21 = DenseMatrix::<f64>::elementary(2, 1, 0);
        let c = e12.commutator(&e21).unwrap();
        assert_eq!(c.as_slice(), &[1.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn determinant_and_singular_values() {
        let a = DenseMatrix::<f64>::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        assert!((a.determinant().unwrap() - 5.0).abs() < 1e-14);
        let sv = a.singular_values();
        // symmetric positive definite: singular values are the eigenvalues (5 ± √5)/2
        assert!((sv[0] - (5.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((sv[1] - (5.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_of_rank_deficient_matrix() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]).unwrap();
        assert_eq!(a.rank(1e-9), 1);
        assert_eq!(DenseMatrix::<f64>::zeros(3, 3).rank(1e-9), 0);
    }

    #[test]
    fn negative_definiteness() {
        assert!(DenseMatrix::<f64>::identity(3).scale(-1.0).is_negative_definite());
        let skewed = DenseMatrix::from_rows(&[vec![-1.0, 5.0], vec![-5.0, -1.0]]).unwrap();
        assert!(skewed.is_negative_definite());
        assert!(!DenseMatrix::from_diagonal(&[-1.0, 0.0]).is_negative_definite());
    }

    #[test]
    fn qr_frame_is_orthonormal() {
        let mut f = vec![1.0, 1.0, 0.0, 1.0, 1.0, 0.0_f64]; // 3x2
        let mut r = vec![0.0; 2];
        qr_in_place(&mut f, 3, 2, &mut r);
        let c0 = [f[0], f[2], f[4]];
        let c1 = [f[1], f[3], f[5]];
        assert!((crate::scalar::dot(&c0, &c1)).abs() < 1e-15);
        assert!((crate::scalar::norm(&c1) - 1.0).abs() < 1e-15);
        assert!((r[0] - 2f64.sqrt()).abs() < 1e-15);
    }
}
