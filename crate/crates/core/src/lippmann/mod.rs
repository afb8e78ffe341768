//! Nyström discretization of the 1D Lippmann–Schwinger operator
//!
//! ```text
//! V_q(k0) u(x) = (i k0 / 2) ∫_0^L exp(i k0 |x − y|) q(y) u(y) dy
//! ```
//!
//! i.e. the free-space Green's function `G(x, y) = (i / 2k0) exp(i k0 |x − y|)`
//! with the factor `k0²` folded into the kernel. The matrix entries are
//! `M[i, j] = (i k0 / 2) exp(i k0 |x_i − x_j|) q(x_j) w_j`.
//!
//! Because the kernel separates on either side of the diagonal, the same
//! matrix can be applied in O(n) with running sums; [`LSOperator`] does that
//! when used as a [`LinearOperator`], and keeps the assembled dense matrix for
//! factorizations and eigenvalue computations.

mod fd;

pub use fd::{fd_oracle, fd_solve, FdSolution};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{arnoldi, eigenvalues_dense, norm, ComplexField, DenseOperator, LinearOperator, LuFactors};
use crate::problem::{sample_medium, Grid, Medium, WaveProblem};

/// Contract on ‖(I − V)u − rhs‖ / ‖rhs‖ for [`direct_solve`].
pub const DIRECT_SOLVE_RESIDUAL: f64 = 1e-9;

/// The discretized operator `V_q(k0)` together with everything it was built from.
#[derive(Debug, Clone)]
pub struct LSOperator {
    problem: WaveProblem,
    medium: Medium,
    grid: Grid,
    samples: Vec<f64>,
    matrix: DenseOperator,
    /// exp(i k0 x_j)
    phases: Vec<Complex64>,
    /// q(x_j) w_j
    coefficients: Vec<f64>,
}

pub fn assemble(problem: &WaveProblem, medium: &Medium, grid: &Grid) -> Result<LSOperator> {
    let samples = sample_medium(medium, grid)?;
    let k0 = problem.k0();
    let n = grid.len();
    let nodes = grid.nodes();
    let weights = grid.weights();
    let prefactor = Complex64::new(0.0, 0.5 * k0);

    // (prefactor · kernel · w_j) · q_j, so that scaling q scales entries exactly.
    let matrix = DenseOperator::from_fn(n, n, |i, j| {
        let phase = Complex64::from_polar(1.0, k0 * (nodes[i] - nodes[j]).abs());
        (prefactor * phase * weights[j]) * samples[j]
    });
    let phases = nodes.iter().map(|&x| Complex64::from_polar(1.0, k0 * x)).collect();
    let coefficients = samples.iter().zip(weights).map(|(q, w)| q * w).collect();

    Ok(LSOperator {
        problem: *problem,
        medium: medium.clone(),
        grid: grid.clone(),
        samples,
        matrix,
        phases,
        coefficients,
    })
}

impl LSOperator {
    pub fn problem(&self) -> &WaveProblem {
        &self.problem
    }

    pub fn medium(&self) -> &Medium {
        &self.medium
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `q` at the grid nodes.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn matrix(&self) -> &DenseOperator {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.grid.len()
    }

    /// Running-sum evaluation of `Σ_j exp(±i k0 |x_i − x_j|) f(j)`.
    fn kernel_sum(&self, f: impl Fn(usize) -> Complex64, conjugate: bool, out: &mut [Complex64]) {
        let n = self.n();
        let phase = |j: usize| if conjugate { self.phases[j].conj() } else { self.phases[j] };
        // out_i ← exp(±ik x_i) Σ_{j≤i} exp(∓ik x_j) f_j
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let p = phase(i);
            acc += p.conj() * f(i);
            *o = p * acc;
        }
        // out_i += exp(∓ik x_i) Σ_{j>i} exp(±ik x_j) f_j
        let mut acc = Complex64::new(0.0, 0.0);
        for i in (0..n).rev() {
            let p = phase(i);
            out[i] += p.conj() * acc;
            acc += p * f(i);
        }
    }

    /// Vᴴ·x in O(n).
    pub fn apply_adjoint_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        self.kernel_sum(|j| x[j], true, out);
        let factor = Complex64::new(0.0, -0.5 * self.problem.k0());
        for (o, c) in out.iter_mut().zip(&self.coefficients) {
            *o *= factor * c;
        }
    }
}

impl LinearOperator for LSOperator {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        self.kernel_sum(|j| x[j] * self.coefficients[j], false, out);
        let factor = Complex64::new(0.0, 0.5 * self.problem.k0());
        for o in out.iter_mut() {
            *o *= factor;
        }
    }
}

/// Samples of the incident plane wave `exp(i k0 khat x)`.
pub fn incident_wave(op: &LSOperator) -> ComplexField {
    let k = op.problem.k0() * op.problem.incidence().sign();
    op.grid.nodes().iter().map(|&x| Complex64::from_polar(1.0, k * x)).collect::<Vec<_>>().into()
}

/// ψ = V_q(k0)·exp(i k0 khat ·) on the grid.
pub fn incident_rhs(op: &LSOperator) -> ComplexField {
    op.apply(&incident_wave(op)).into()
}

/// Solves `(I − V)u = rhs` by LU, enforcing the residual contract.
pub fn direct_solve(op: &LSOperator, rhs: &[Complex64]) -> Result<ComplexField> {
    let n = op.n();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: rhs.len(),
        });
    }
    let mut system = op.matrix.scale(Complex64::new(-1.0, 0.0));
    for i in 0..n {
        system[(i, i)] += Complex64::new(1.0, 0.0);
    }
    let u = LuFactors::factorize(&system)?.solve(rhs)?;

    let rhs_norm = norm(rhs);
    let residual: Vec<Complex64> = system.matvec(&u).iter().zip(rhs).map(|(a, b)| a - b).collect();
    let res = norm(&residual);
    if res > DIRECT_SOLVE_RESIDUAL * rhs_norm {
        return Err(Error::InaccurateSolve {
            relative_residual: if rhs_norm > 0.0 { res / rhs_norm } else { res },
        });
    }
    Ok(u.into())
}

/// Settings for the power iteration behind [`operator_norm_with`].
#[derive(Debug, Clone, Copy)]
pub struct NormOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_iter: 200_000,
            seed: 0x5eed,
        }
    }
}

/// Result of the largest-singular-value computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// L²(0, L) operator norm of the discretized `V`, i.e. the largest singular
/// value of `W^{1/2} V W^{-1/2}` (W the quadrature weights).
///
/// For `k0 = L = 1, q0 = 5` this is 2.4455, and 15.93 for `k0 = 50, q0 = 1`;
/// the spectral radius is 2.4183 and 7.21 respectively.
pub fn operator_norm(op: &LSOperator) -> f64 {
    operator_norm_with(op, &NormOptions::default()).value
}

pub fn operator_norm_with(op: &LSOperator, opts: &NormOptions) -> NormEstimate {
    let n = op.n();
    if op.medium.is_zero() || op.coefficients.iter().all(|c| *c == 0.0) {
        return NormEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let sqrt_w: Vec<f64> = op.grid.weights().iter().map(|w| w.sqrt()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random_vector = |rng: &mut ChaCha8Rng| -> Vec<Complex64> {
        (0..n).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect()
    };

    let mut x = random_vector(&mut rng);
    let mut tmp = vec![Complex64::new(0.0, 0.0); n];
    let mut bx = vec![Complex64::new(0.0, 0.0); n];
    let mut sigma_prev = 0.0;
    let mut sigma = 0.0;
    let mut stagnant = 0;
    for it in 1..=opts.max_iter {
        let xn = norm(&x);
        if xn == 0.0 || !xn.is_finite() {
            // start vector annihilated: restart from a perturbed vector
            x = random_vector(&mut rng);
            continue;
        }
        x.iter_mut().for_each(|z| *z /= xn);
        // bx = W^{1/2} V W^{-1/2} x
        for (t, (xi, s)) in tmp.iter_mut().zip(x.iter().zip(&sqrt_w)) {
            *t = xi / s;
        }
        op.apply_into(&tmp, &mut bx);
        for (b, s) in bx.iter_mut().zip(&sqrt_w) {
            *b *= s;
        }
        sigma = norm(&bx);
        // x ← Bᴴ bx = W^{-1/2} Vᴴ W^{1/2} bx
        for (t, (b, s)) in tmp.iter_mut().zip(bx.iter().zip(&sqrt_w)) {
            *t = b * s;
        }
        op.apply_adjoint_into(&tmp, &mut x);
        for (xi, s) in x.iter_mut().zip(&sqrt_w) {
            *xi /= s;
        }
        if (sigma - sigma_prev).abs() <= opts.rel_tol * 1e-2 * sigma {
            stagnant += 1;
            if stagnant >= 3 {
                return NormEstimate {
                    value: sigma,
                    iterations: it,
                    converged: true,
                };
            }
        } else {
            stagnant = 0;
        }
        sigma_prev = sigma;
    }
    NormEstimate {
        value: sigma,
        iterations: opts.max_iter,
        converged: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralRadiusEstimate {
    pub value: f64,
    pub krylov_order: usize,
}

/// Largest Ritz value magnitude of an Arnoldi projection from a seeded random
/// start, doubling the order from 32 until it moves by less than 1e−10
/// relative or the Krylov space is exhausted.
///
/// 2.4183 for `k0 = L = 1, q0 = 5`. Values quoted as `‖V_q(k0)‖` are often this
/// quantity; the largest singular value is larger for this non-normal
/// operator. See [`operator_norm`].
pub fn spectral_radius(op: &LSOperator, seed: u64) -> Result<SpectralRadiusEstimate> {
    let n = op.n();
    if op.coefficients.iter().all(|c| *c == 0.0) {
        return Ok(SpectralRadiusEstimate {
            value: 0.0,
            krylov_order: 0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let ritz = |m: usize| -> Result<(f64, usize, bool)> {
        let ar = arnoldi(op, &start, m)?;
        let r = eigenvalues_dense(&ar.hessenberg)?.iter().map(|z| z.norm()).fold(0.0, f64::max);
        Ok((r, ar.order(), ar.breakdown))
    };
    let mut m = 32.min(n);
    let (mut value, mut order, mut exact) = ritz(m)?;
    while !exact && m < n {
        m = (2 * m).min(n);
        let (refined, o, e) = ritz(m)?;
        let settled = (refined - value).abs() <= 1e-10 * refined;
        (value, order, exact) = (refined, o, e);
        if settled {
            break;
        }
    }
    Ok(SpectralRadiusEstimate {
        value,
        krylov_order: order,
    })
}

/// `C_{k0,q} = k0 √L ‖q‖₂ / 2`, the Hilbert–Schmidt bound on ‖V_q(k0)‖.
pub fn hilbert_schmidt_bound(problem: &WaveProblem, medium: &Medium) -> f64 {
    let l = problem.length();
    0.5 * problem.k0() * l.sqrt() * medium.l2_norm_sq(l).sqrt()
}

/// Closed form of ψ = V_q e^{ik0·} for a constant medium and left incidence.
pub fn constant_medium_rhs(k0: f64, length: f64, q0: f64, x: f64) -> Complex64 {
    let i = Complex64::i();
    let e = |t: f64| Complex64::from_polar(1.0, t);
    i * k0 * q0 * 0.5 * (x * e(k0 * x) + (e(2.0 * k0 * length) * e(-k0 * x) - e(k0 * x)) / (2.0 * i * k0))
}
