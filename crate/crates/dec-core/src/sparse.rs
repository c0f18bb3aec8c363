//! Compressed sparse row matrices over integer, real and complex scalars.
//!
//! Operators in this crate are small enough that a plain CSR layout with
//! deterministic assembly (sorted, deduplicated triples) covers every need:
//! transposes, products, diagonal scaling and row/column restriction.

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{DecError, Result};

/// Scalar types storable in a [`CsrMatrix`].
pub trait SparseScalar:
    Copy + PartialEq + Zero + std::ops::Add<Output = Self> + std::ops::Mul<Output = Self>
{
    fn modulus(self) -> f64;
}

impl SparseScalar for i64 {
    fn modulus(self) -> f64 {
        self.unsigned_abs() as f64
    }
}

impl SparseScalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl SparseScalar for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Sparse matrix in compressed row form. Within each row the column indices
/// are strictly increasing and no explicit zeros are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: SparseScalar> CsrMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from (row, col, value) triples. Duplicate positions are summed;
    /// entries that sum to zero are dropped.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, T)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut it = triplets.into_iter().peekable();
        while let Some((r, c, mut v)) = it.next() {
            assert!(r < rows && c < cols, "triplet ({r},{c}) out of bounds");
            while let Some(&(r2, c2, v2)) = it.peek() {
                if r2 == r && c2 == c {
                    v = v + v2;
                    it.next();
                } else {
                    break;
                }
            }
            if v != T::zero() {
                indptr[r + 1] += 1;
                indices.push(c);
                values.push(v);
            }
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self
    where
        T: num_traits::One,
    {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, T::one())).collect())
    }

    pub fn from_diag(diag: &[T]) -> Self {
        Self::from_triplets(
            diag.len(),
            diag.len(),
            diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[T]) {
        let lo = self.indptr[r];
        let hi = self.indptr[r + 1];
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let (idx, vals) = self.row(r);
        match idx.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (idx, vals) = self.row(r);
            idx.iter().zip(vals.iter()).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn transpose(&self) -> Self {
        let triplets = self.iter().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.cols, self.rows, triplets)
    }

    pub fn map<U: SparseScalar>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        let triplets = self.iter().map(|(r, c, v)| (r, c, f(v))).collect();
        CsrMatrix::from_triplets(self.rows, self.cols, triplets)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(DecError::Assembly(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut triplets: Vec<(usize, usize, T)> = self.iter().collect();
        triplets.extend(other.iter());
        Ok(Self::from_triplets(self.rows, self.cols, triplets))
    }

    /// Sparse-sparse product self * other.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(DecError::Assembly(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut triplets = Vec::new();
        for r in 0..self.rows {
            let (idx, vals) = self.row(r);
            for (&k, &a) in idx.iter().zip(vals) {
                let (oidx, ovals) = other.row(k);
                for (&c, &b) in oidx.iter().zip(ovals) {
                    triplets.push((r, c, a * b));
                }
            }
        }
        Ok(Self::from_triplets(self.rows, other.cols, triplets))
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![T::zero(); self.rows];
        for r in 0..self.rows {
            let (idx, vals) = self.row(r);
            let mut acc = T::zero();
            for (&c, &v) in idx.iter().zip(vals) {
                acc = acc + v * x[c];
            }
            y[r] = acc;
        }
        y
    }

    /// Left-multiplies by diag(d): scales row r by d[r].
    pub fn scale_rows(&self, d: &[T]) -> Self {
        assert_eq!(d.len(), self.rows);
        let triplets = self.iter().map(|(r, c, v)| (r, c, d[r] * v)).collect();
        Self::from_triplets(self.rows, self.cols, triplets)
    }

    /// Right-multiplies by diag(d): scales column c by d[c].
    pub fn scale_cols(&self, d: &[T]) -> Self {
        assert_eq!(d.len(), self.cols);
        let triplets = self.iter().map(|(r, c, v)| (r, c, v * d[c])).collect();
        Self::from_triplets(self.rows, self.cols, triplets)
    }

    /// Restriction to the given (sorted, distinct) row and column index sets.
    pub fn restrict(&self, keep_rows: &[usize], keep_cols: &[usize]) -> Self {
        let mut row_map = vec![usize::MAX; self.rows];
        for (new, &old) in keep_rows.iter().enumerate() {
            row_map[old] = new;
        }
        let mut col_map = vec![usize::MAX; self.cols];
        for (new, &old) in keep_cols.iter().enumerate() {
            col_map[old] = new;
        }
        let triplets = self
            .iter()
            .filter(|&(r, c, _)| row_map[r] != usize::MAX && col_map[c] != usize::MAX)
            .map(|(r, c, v)| (row_map[r], col_map[c], v))
            .collect();
        Self::from_triplets(keep_rows.len(), keep_cols.len(), triplets)
    }

    /// Largest entry modulus; zero for an empty matrix.
    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.modulus()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.modulus() * v.modulus())
            .sum::<f64>()
            .sqrt()
    }

    pub fn diagonal(&self) -> Vec<T> {
        let n = self.rows.min(self.cols);
        (0..n).map(|i| self.get(i, i)).collect()
    }

    /// True when every stored entry lies on the main diagonal.
    pub fn is_diagonal(&self) -> bool {
        self.iter().all(|(r, c, _)| r == c)
    }
}

impl CsrMatrix<Complex64> {
    pub fn from_real(m: &CsrMatrix<f64>) -> Self {
        m.map(|v| Complex64::new(v, 0.0))
    }

    /// Max modulus of (self - self^dagger); zero for a Hermitian matrix.
    pub fn hermitian_defect(&self) -> f64 {
        let adj = self.map(|v| v.conj()).transpose();
        let mut worst: f64 = 0.0;
        for (r, c, v) in self.iter() {
            worst = worst.max((v - adj.get(r, c)).norm());
        }
        for (r, c, v) in adj.iter() {
            worst = worst.max((v - self.get(r, c)).norm());
        }
        worst
    }

    /// Largest imaginary modulus over stored entries.
    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let mut m = nalgebra::DMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn to_dense_real(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v.re;
        }
        m
    }
}

impl CsrMatrix<f64> {
    pub fn to_dense_f64(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplet_assembly_dedups_and_sorts() {
        let m = CsrMatrix::from_triplets(2, 3, vec![(1, 2, 2.0), (0, 1, 1.0), (1, 2, -2.0), (1, 0, 5.0)]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(1, 0), 5.0);
        assert_eq!(m.get(1, 2), 0.0);
    }

    #[test]
    fn transpose_roundtrip() {
        let m = CsrMatrix::from_triplets(3, 2, vec![(0, 1, 1i64), (2, 0, -4), (1, 1, 7)]);
        assert_eq!(m.transpose().transpose(), m);
        assert_eq!(m.transpose().get(1, 0), 1);
    }

    #[test]
    fn matmul_matches_dense() {
        let a = CsrMatrix::from_triplets(2, 3, vec![(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]);
        let b = CsrMatrix::from_triplets(3, 2, vec![(0, 0, 1.0), (2, 0, 1.0), (1, 1, -1.0)]);
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.get(0, 0), 3.0);
        assert_eq!(c.get(1, 1), -3.0);
        assert_eq!(c.nnz(), 2);
    }

    #[test]
    fn restrict_picks_submatrix() {
        let m = CsrMatrix::from_triplets(3, 3, vec![(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0), (0, 2, 9.0)]);
        let s = m.restrict(&[0, 2], &[2]);
        assert_eq!(s.rows(), 2);
        assert_eq!(s.cols(), 1);
        assert_eq!(s.get(0, 0), 9.0);
        assert_eq!(s.get(1, 0), 3.0);
    }
}
