use num_complex::Complex64;

use super::{axpy, dot, norm, DenseMatrix, LinearOperator};
use crate::error::{Error, Result};

/// A new direction is discarded when what survives orthogonalization is
/// smaller than this fraction of ‖A·v_j‖.
const BREAKDOWN_TOL: f64 = 1e-12;

/// Output of [`arnoldi`].
///
/// With `m = basis.len()`, the relation `A·V_m = V_m·H_m + h·v_{m+1}·e_mᵀ`
/// holds, where `h = residual_norm` and `v_{m+1} = next`.
#[derive(Debug, Clone)]
pub struct ArnoldiResult {
    /// Orthonormal Krylov basis, one vector per column.
    pub basis: Vec<Vec<Complex64>>,
    /// Square `m × m` projection `V_mᴴ·A·V_m`.
    pub hessenberg: DenseMatrix,
    pub residual_norm: f64,
    /// Next basis vector; `None` after breakdown.
    pub next: Option<Vec<Complex64>>,
    /// The Krylov space became invariant, so `hessenberg` represents `A`
    /// restricted to it exactly.
    pub breakdown: bool,
}

impl ArnoldiResult {
    pub fn order(&self) -> usize {
        self.basis.len()
    }
}

/// Arnoldi process with modified Gram–Schmidt and one reorthogonalization pass.
pub fn arnoldi<A: LinearOperator + ?Sized>(op: &A, start: &[Complex64], m: usize) -> Result<ArnoldiResult> {
    let n = op.dim();
    if start.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: start.len(),
        });
    }
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "Krylov order must satisfy 1 <= m <= n = {n}, got {m}"
        )));
    }
    let start_norm = norm(start);
    if start_norm == 0.0 || !start_norm.is_finite() {
        return Err(Error::InvalidParameter("Arnoldi start vector must be nonzero and finite".into()));
    }

    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
    basis.push(start.iter().map(|z| z / start_norm).collect());
    let mut h = DenseMatrix::zeros(m + 1, m);
    let mut w = vec![Complex64::new(0.0, 0.0); n];

    for j in 0..m {
        op.apply_into(&basis[j], &mut w);
        let applied_norm = norm(&w);
        for _pass in 0..2 {
            for (i, v) in basis.iter().enumerate().take(j + 1) {
                let coef = dot(v, &w);
                h[(i, j)] += coef;
                axpy(-coef, v, &mut w);
            }
        }
        let beta = norm(&w);
        if !beta.is_finite() {
            return Err(Error::NonFinite("Arnoldi vector".into()));
        }
        if beta <= BREAKDOWN_TOL * applied_norm {
            let k = j + 1;
            return Ok(ArnoldiResult {
                basis,
                hessenberg: h.leading_block(k, k),
                residual_norm: beta,
                next: None,
                breakdown: true,
            });
        }
        h[(j + 1, j)] = Complex64::new(beta, 0.0);
        basis.push(w.iter().map(|z| z / beta).collect());
    }

    let next = basis.pop();
    Ok(ArnoldiResult {
        basis,
        hessenberg: h.leading_block(m, m),
        residual_norm: h[(m, m - 1)].re,
        next,
        breakdown: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{eigenvalues_dense, DiagonalOperator, ONE, ZERO};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
    }

    fn start(n: usize) -> Vec<Complex64> {
        (0..n).map(|k| Complex64::new(1.0 + k as f64 * 0.1, (k as f64).sin())).collect()
    }

    #[test]
    fn basis_is_orthonormal_and_relation_holds() {
        let n = 60;
        let m = 25;
        let a = random_matrix(n, 3);
        let r = arnoldi(&a, &start(n), m).unwrap();
        assert!(!r.breakdown);
        for i in 0..m {
            for j in 0..m {
                let g = dot(&r.basis[i], &r.basis[j]);
                let want = if i == j { ONE } else { ZERO };
                assert!((g - want).norm() <= 1e-10, "({i},{j}) {g}");
            }
        }
        // A·v_j − Σ_i H[i,j] v_i − [j = m−1]·h·v_m
        let next = r.next.as_ref().unwrap();
        for j in 0..m {
            let mut w = a.matvec(&r.basis[j]);
            for i in 0..m {
                axpy(-r.hessenberg[(i, j)], &r.basis[i], &mut w);
            }
            if j == m - 1 {
                axpy(Complex64::new(-r.residual_norm, 0.0), next, &mut w);
            }
            assert!(norm(&w) <= 1e-10 * a.frobenius_norm(), "column {j}");
        }
    }

    #[test]
    fn full_order_reproduces_spectrum() {
        let n = 40;
        let a = random_matrix(n, 5);
        let r = arnoldi(&a, &start(n), n).unwrap();
        assert_eq!(r.order(), n);
        let ritz = eigenvalues_dense(&r.hessenberg).unwrap();
        let exact = eigenvalues_dense(&a).unwrap();
        for z in &exact {
            let d = ritz.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min);
            assert!(d <= 1e-6, "{z}: {d}");
        }
    }

    #[test]
    fn eigenvector_start_breaks_down_immediately() {
        let a = DiagonalOperator::from_real(&[2.0, 0.5]);
        let r = arnoldi(&a, &[ZERO, ONE], 2).unwrap();
        assert!(r.breakdown);
        assert_eq!(r.order(), 1);
        assert!((r.hessenberg[(0, 0)] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn identity_breaks_down_with_unit_projection() {
        let a = DenseMatrix::identity(4);
        let start = vec![ONE, Complex64::new(0.0, 2.0), ZERO, Complex64::new(-1.0, 1.0)];
        let r = arnoldi(&a, &start, 3).unwrap();
        assert!(r.breakdown);
        assert_eq!(r.order(), 1);
        assert!((r.hessenberg[(0, 0)] - ONE).norm() < 1e-14);
    }

    #[test]
    fn rejects_zero_start_and_bad_order() {
        let a = DenseMatrix::identity(3);
        assert!(arnoldi(&a, &[ZERO; 3], 2).is_err());
        assert!(arnoldi(&a, &[ONE; 3], 4).is_err());
        assert!(arnoldi(&a, &[ONE; 3], 0).is_err());
    }
}
