//! Eigenvalues of dense complex matrices.
//!
//! Householder reduction to upper Hessenberg form followed by the implicit
//! single-shift complex QR iteration with Wilkinson shifts. Only eigenvalues
//! are computed, so each QR sweep touches the active unreduced block only.

use num_complex::Complex64;

use super::{norm, DenseMatrix, ONE, ZERO};
use crate::error::{Error, Result};

pub const DEFAULT_EIGEN_CAP: usize = 4096;

/// Relative size of a subdiagonal entry, against its two diagonal
/// neighbours, below which it is set to zero.
const DEFLATION_TOL: f64 = 1e-12;

/// Sweeps without a deflation before an exceptional shift is used.
const EXCEPTIONAL_SHIFT_PERIOD: usize = 10;

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Largest accepted dimension.
    pub cap: usize,
    /// The solver gives up after `max_sweeps_per_dim · n` QR sweeps.
    pub max_sweeps_per_dim: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_EIGEN_CAP,
            max_sweeps_per_dim: 100,
        }
    }
}

/// All eigenvalues of a square matrix, in no particular order.
pub fn eigenvalues_dense(a: &DenseMatrix) -> Result<Vec<Complex64>> {
    eigenvalues_with(a, &EigenOptions::default())
}

pub fn eigenvalues_with(a: &DenseMatrix, opts: &EigenOptions) -> Result<Vec<Complex64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            actual: a.cols(),
        });
    }
    let n = a.rows();
    if n > opts.cap {
        return Err(Error::EigenCapExceeded { n, cap: opts.cap });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("eigenvalue input matrix".into()));
    }
    let mut h = a.clone();
    reduce_to_hessenberg(&mut h);
    hessenberg_qr(&mut h, opts.max_sweeps_per_dim.saturating_mul(n.max(1)))
}

/// Eigenvalues of a Hermitian matrix as reals (imaginary parts are roundoff).
pub fn hermitian_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(eigenvalues_dense(a)?.into_iter().map(|z| z.re).collect())
}

/// In-place unitary similarity `A ← QᴴAQ` with `A` upper Hessenberg on exit.
pub(crate) fn reduce_to_hessenberg(a: &mut DenseMatrix) {
    let n = a.rows();
    let mut v = vec![ZERO; n];
    let mut w = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        for i in 0..len {
            v[i] = a[(k + 1 + i, k)];
        }
        if norm(&v[1..len]) == 0.0 {
            continue;
        }
        let xnorm = norm(&v[..len]);
        let x0 = v[0];
        let phase = if x0 == ZERO { ONE } else { x0 / x0.norm() };
        let beta = -phase * xnorm;
        v[0] = x0 - beta;
        let vnorm_sq: f64 = v[..len].iter().map(|z| z.norm_sqr()).sum();
        let tau = 2.0 / vnorm_sq;

        // H·A on rows k+1.., H = I − τ v vᴴ
        w[k..n].fill(ZERO);
        for (i, vi) in v[..len].iter().enumerate() {
            let vc = vi.conj();
            for (wj, x) in w[k..n].iter_mut().zip(&a.row(k + 1 + i)[k..n]) {
                *wj += vc * x;
            }
        }
        for (i, vi) in v[..len].iter().enumerate() {
            let f = tau * vi;
            for (x, wj) in a.row_mut(k + 1 + i)[k..n].iter_mut().zip(&w[k..n]) {
                *x -= f * wj;
            }
        }

        // A·H on columns k+1..
        for r in 0..n {
            let seg = &mut a.row_mut(r)[k + 1..];
            let d: Complex64 = seg.iter().zip(&v[..len]).map(|(x, vi)| x * vi).sum();
            let f = tau * d;
            for (x, vi) in seg.iter_mut().zip(&v[..len]) {
                *x -= f * vi.conj();
            }
        }

        a[(k + 1, k)] = beta;
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
    }
}

/// Rotation `G = [c s; −s̄ c]` with real `c` such that `G·(x, y)ᵀ = (r, 0)ᵀ`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, ZERO);
    }
    let ax = x.norm();
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    (ax / r, (x / ax) * y.conj() / r)
}

/// Eigenvalues of `[a b; c d]`, larger-magnitude root first.
fn eig2x2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let mean = (a + d) * 0.5;
    let half_diff = (a - d) * 0.5;
    let disc = (half_diff * half_diff + b * c).sqrt();
    let (p, m) = (mean + disc, mean - disc);
    let big = if p.norm() >= m.norm() { p } else { m };
    let det = a * d - b * c;
    let small = if big == ZERO { ZERO } else { det / big };
    (big, small)
}

fn wilkinson_shift(h: &DenseMatrix, hi: usize) -> Complex64 {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let (e1, e2) = eig2x2(a, b, c, d);
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

fn hessenberg_qr(h: &mut DenseMatrix, max_sweeps: usize) -> Result<Vec<Complex64>> {
    let n = h.rows();
    let mut eig = vec![ZERO; n];
    if n == 0 {
        return Ok(eig);
    }
    let abs_floor = f64::EPSILON * h.frobenius_norm();
    let mut hi = n - 1;
    let mut sweeps = 0usize;
    let mut since_deflation = 0usize;

    loop {
        let mut lo = 0;
        for k in (1..=hi).rev() {
            let sub = h[(k, k - 1)].norm();
            let diag = h[(k - 1, k - 1)].norm() + h[(k, k)].norm();
            if sub <= DEFLATION_TOL * diag || sub <= abs_floor {
                h[(k, k - 1)] = ZERO;
                lo = k;
                break;
            }
        }

        if lo == hi {
            eig[hi] = h[(hi, hi)];
            if hi == 0 {
                break;
            }
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        if lo + 1 == hi {
            let (e1, e2) = eig2x2(h[(lo, lo)], h[(lo, hi)], h[(hi, lo)], h[(hi, hi)]);
            eig[lo] = e1;
            eig[hi] = e2;
            if lo == 0 {
                break;
            }
            hi = lo - 1;
            since_deflation = 0;
            continue;
        }

        if sweeps >= max_sweeps {
            return Err(Error::EigenNoConvergence {
                sweeps,
                remaining: hi + 1,
            });
        }
        sweeps += 1;
        since_deflation += 1;

        let shift = if since_deflation.is_multiple_of(EXCEPTIONAL_SHIFT_PERIOD) {
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(h, hi)
        };

        let mut x = h[(lo, lo)] - shift;
        let mut y = h[(lo + 1, lo)];
        for k in lo..hi {
            let (c, s) = givens(x, y);
            let j0 = if k > lo { k - 1 } else { lo };
            for j in j0..=hi {
                let a = h[(k, j)];
                let b = h[(k + 1, j)];
                h[(k, j)] = a * c + s * b;
                h[(k + 1, j)] = -s.conj() * a + b * c;
            }
            if k > lo {
                h[(k + 1, k - 1)] = ZERO;
            }
            let sc = s.conj();
            for i in lo..=(k + 2).min(hi) {
                let a = h[(i, k)];
                let b = h[(i, k + 1)];
                h[(i, k)] = a * c + b * sc;
                h[(i, k + 1)] = b * c - a * s;
            }
            if k + 1 < hi {
                x = h[(k + 1, k)];
                y = h[(k + 2, k)];
            }
        }
    }
    Ok(eig)
}
