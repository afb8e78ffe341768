//! Dense complex linear algebra used throughout the crate.
//!
//! Everything here is self-contained: a row-major complex matrix, LU with
//! partial pivoting, a Hessenberg + shifted-QR eigenvalue solver and an
//! Arnoldi process over an abstract [`LinearOperator`].

mod arnoldi;
mod eigen;
mod lu;

pub use arnoldi::{arnoldi, ArnoldiResult};
pub use eigen::{eigenvalues_dense, hermitian_eigenvalues, EigenOptions, DEFAULT_EIGEN_CAP};
pub use lu::{lu_solve, LuFactors};

use std::ops::{Deref, DerefMut, Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Complex samples of a function on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexField(Vec<Complex64>);

impl ComplexField {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![ZERO; n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> Complex64) -> Self {
        Self((0..n).map(f).collect())
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self(self.0.iter().map(|z| z * factor).collect())
    }

    /// ‖self − other‖₂.
    pub fn distance(&self, other: &[Complex64]) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

impl Deref for ComplexField {
    type Target = [Complex64];
    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl DerefMut for ComplexField {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }
}

impl From<Vec<Complex64>> for ComplexField {
    fn from(v: Vec<Complex64>) -> Self {
        Self(v)
    }
}

/// Euclidean norm, scaled to avoid overflow for large entries.
pub fn norm(x: &[Complex64]) -> f64 {
    let plain: f64 = x.iter().map(|z| z.norm_sqr()).sum();
    if plain.is_finite() && plain > f64::MIN_POSITIVE / f64::EPSILON {
        return plain.sqrt();
    }
    let scale = x.iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let sum: f64 = x.iter().map(|z| (z / scale).norm_sqr()).sum();
    scale * sum.sqrt()
}

/// xᴴy
pub fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// y += a·x
pub fn axpy(a: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Anything that can be applied to a complex vector of fixed length.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// Writes A·x into `out`. Both slices have length [`dim`](Self::dim).
    fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]);

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.dim()];
        self.apply_into(x, &mut out);
        out
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        (**self).apply_into(x, out)
    }
}

/// Diagonal operator; the canonical normal operator for synthetic checks.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalOperator {
    pub diagonal: Vec<Complex64>,
}

impl DiagonalOperator {
    pub fn new(diagonal: Vec<Complex64>) -> Self {
        Self { diagonal }
    }

    pub fn from_real(diagonal: &[f64]) -> Self {
        Self::new(diagonal.iter().map(|&d| Complex64::new(d, 0.0)).collect())
    }
}

impl LinearOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.diagonal.len()
    }

    fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        for ((o, d), xi) in out.iter_mut().zip(&self.diagonal).zip(x) {
            *o = d * xi;
        }
    }
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

/// The discretized integral operator is always square; the alias names that role.
pub type DenseOperator = DenseMatrix;

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: r, cols: c, data })
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

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols, "matvec dimension");
        (0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: other.rows,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for (k, a) in self.row(i).iter().enumerate() {
                if *a == ZERO {
                    continue;
                }
                let src = other.row(k);
                for (o, b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// self + alpha·other
    pub fn add_scaled(&self, alpha: Complex64, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                actual: other.rows * other.cols,
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + alpha * b).collect(),
        })
    }

    /// Leading `rows × cols` block.
    pub fn leading_block(&self, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |i, j| self[(i, j)])
    }

    /// Spectral (2-) norm through the eigenvalues of the Gram matrix. Meant
    /// for the small projected matrices produced by Arnoldi.
    pub fn spectral_norm(&self) -> Result<f64> {
        if self.rows == 0 || self.cols == 0 {
            return Ok(0.0);
        }
        let gram = self.adjoint().matmul(self)?;
        let eigs = hermitian_eigenvalues(&gram)?;
        Ok(eigs.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn norm_is_scale_safe() {
        let big = vec![c(1e200, 0.0), c(0.0, 1e200)];
        assert!((norm(&big) / 1e200 - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(norm(&[ZERO, ZERO]), 0.0);
    }

    #[test]
    fn matmul_and_adjoint() {
        let a = DenseMatrix::from_rows(&[vec![c(1.0, 1.0), c(2.0, 0.0)], vec![c(0.0, -1.0), c(3.0, 0.0)]]).unwrap();
        let ah = a.adjoint();
        assert_eq!(ah[(0, 1)], c(0.0, 1.0));
        let id = DenseMatrix::identity(2);
        assert_eq!(a.matmul(&id).unwrap(), a);
        assert_eq!(a.trace(), c(4.0, 1.0));
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let d = DenseMatrix::from_diagonal(&[c(0.3, 0.4), c(-2.0, 0.0), c(0.0, 1.0)]);
        assert!((d.spectral_norm().unwrap() - 2.0).abs() < 1e-13);
    }
}
