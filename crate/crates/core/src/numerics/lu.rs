use num_complex::Complex64;

use super::{DenseMatrix, ZERO};
use crate::error::{Error, Result};

/// Pivots smaller than this fraction of the original row scale are treated as zero.
const PIVOT_TOLERANCE: f64 = 1e-14;

/// Packed LU factors with partial pivoting: `P·A = L·U`, unit lower `L`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: DenseMatrix,
    /// `perm[i]` is the original row that ended up in position `i`.
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn factorize(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                actual: a.cols(),
            });
        }
        if !a.is_finite() {
            return Err(Error::NonFinite("LU input matrix".into()));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut scale: Vec<f64> = (0..n)
            .map(|i| a.row(i).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .collect();

        for k in 0..n {
            let (p, pmag) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmag <= PIVOT_TOLERANCE * scale[p] || pmag == 0.0 {
                return Err(Error::SingularMatrix { pivot: k });
            }
            if p != k {
                swap_rows(&mut lu, p, k);
                perm.swap(p, k);
                scale.swap(p, k);
            }
            let pivot = lu[(k, k)];
            let (upper, lower) = split_rows(&mut lu, k);
            let pivot_tail = &upper[k + 1..];
            for row in lower.chunks_mut(n) {
                let l = row[k] / pivot;
                row[k] = l;
                if l == ZERO {
                    continue;
                }
                for (x, u) in row[k + 1..].iter_mut().zip(pivot_tail) {
                    *x -= l * u;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: b.len(),
            });
        }
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: Complex64 = row[..i].iter().zip(&x[..i]).map(|(l, y)| l * y).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: Complex64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, y)| u * y).sum();
            x[i] = (x[i] - s) / row[i];
        }
        Ok(x)
    }

    /// Unit lower-triangular factor.
    pub fn lower(&self) -> DenseMatrix {
        let n = self.dim();
        DenseMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => self.lu[(i, j)],
            std::cmp::Ordering::Equal => super::ONE,
            std::cmp::Ordering::Less => ZERO,
        })
    }

    pub fn upper(&self) -> DenseMatrix {
        let n = self.dim();
        DenseMatrix::from_fn(n, n, |i, j| if i <= j { self.lu[(i, j)] } else { ZERO })
    }

    /// `P·A`, i.e. the rows of `a` in pivot order.
    pub fn permute_rows(&self, a: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(self.perm[i], j)])
    }

    /// Inverse by solving against the identity columns.
    pub fn inverse(&self) -> Result<DenseMatrix> {
        let n = self.dim();
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![ZERO; n];
        for j in 0..n {
            e.iter_mut().for_each(|z| *z = ZERO);
            e[j] = super::ONE;
            let col = self.solve(&e)?;
            for (i, v) in col.into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        Ok(inv)
    }
}

fn swap_rows(m: &mut DenseMatrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    let n = m.cols();
    let (lo, hi) = (a.min(b), a.max(b));
    let (head, tail) = m.data_mut().split_at_mut(hi * n);
    head[lo * n..(lo + 1) * n].swap_with_slice(&mut tail[..n]);
}

/// Splits the buffer into rows `0..=k` (returned as row `k` only) and rows `k+1..`.
fn split_rows(m: &mut DenseMatrix, k: usize) -> (&mut [Complex64], &mut [Complex64]) {
    let n = m.cols();
    let data = m.data_mut();
    let (head, tail) = data.split_at_mut((k + 1) * n);
    (&mut head[k * n..], tail)
}

/// Solves `A·x = b` by LU with partial pivoting.
pub fn lu_solve(a: &DenseMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    LuFactors::factorize(a)?.solve(b)
}
