//! Complex relaxation of the Born series.
//!
//! With `γ = ε e^{iα}` and `M = (1 − γ)I + γV`, the equation `(I − V)u = ψ` is
//! equivalent to `(I − M)u = γψ`, whose Neumann series `Σ Mʲ γψ` converges when
//! every eigenvalue `μ = 1 − γ(1 − λ)` of `M` lies in the open unit disk.
//!
//! For a constant medium the eigenvalues `λ` lie on the locus `Λ(q0, κ)` and
//! satisfy `Im λ > 0`, which is what makes a suitable `γ` exist. Two recipes
//! are provided:
//!
//! * analytic: `α` from a free parameter `ε′ > κq0/2`, and an upper bound on
//!   `ε` built from `m = max{α, arctan ε′}`;
//! * numeric: the same bound with `m = max{|ξ+|, |ξ−|}`, where `ξ±` bracket the
//!   argument of `e^{iα}(1 − ω)` over a sampled locus. It admits larger `ε`.
//!
//! The bound uses `|1 − λ| ≤ 1 + κq0/2`, i.e. the Hilbert–Schmidt estimate of
//! `‖V‖`.
//!
//! The condition checked is `|μ| < 1`, the unit disk centred at 0. The disk
//! centred at 1, `|γ(1 − λ)| < 1`, does not imply convergence.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::born::{iterate, BornResult, IterateOptions};
use crate::error::{Error, Result};
use crate::lippmann::hilbert_schmidt_bound;
use crate::numerics::LinearOperator;
use crate::problem::{Medium, WaveProblem};
use crate::spectral::SpectralLocus;

/// Default `ε` as a fraction of the admissible bound.
pub const DEFAULT_EPS_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreconditionerParams {
    pub mode: Mode,
    pub kappa: f64,
    pub q0: f64,
    pub eps_prime: f64,
    pub alpha: f64,
    pub eps_max: f64,
    pub eps: f64,
    pub gamma: Complex64,
    pub xi_plus: Option<f64>,
    pub xi_minus: Option<f64>,
}

impl PreconditionerParams {
    /// `0 < ε < eps_max`. An explicitly requested `ε` may violate this; the
    /// parameters are still built so the consequences can be inspected.
    pub fn admissible(&self) -> bool {
        self.eps > 0.0 && self.eps < self.eps_max
    }
}

/// `κq0/2`, the bound on `(Re ω − 1)/Im ω` along the locus.
fn half_kq(kappa: f64, q0: f64) -> f64 {
    0.5 * kappa * q0
}

/// `ε′ = κq0 + 1`
pub fn default_eps_prime(kappa: f64, q0: f64) -> f64 {
    2.0 * half_kq(kappa, q0) + 1.0
}

/// `α = arctan((1 + (κq0/2)ε′)/(ε′ − κq0/2))`
pub fn alpha_from_eps_prime(kappa: f64, q0: f64, eps_prime: f64) -> Result<f64> {
    let c = half_kq(kappa, q0);
    if !(eps_prime > c) || !eps_prime.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "eps_prime must exceed k0·L·q0/2 = {c}, got {eps_prime}"
        )));
    }
    Ok(((1.0 + c * eps_prime) / (eps_prime - c)).atan())
}

/// `min(|tan 2m|/tan m, 2 cos m)/(1 + κq0/2)` for the largest argument `m`
/// of `γ(1 − λ)`.
///
/// `|z − 1| < 1` holds exactly when `|z| < 2 cos arg z`. The `tan` form is
/// below `2 cos m` only for `m ≥ π/3`; for smaller `m` it overshoots and it
/// diverges at `m = π/4`, so the exact form caps it.
pub fn eps_bound(kappa: f64, q0: f64, m: f64) -> Result<f64> {
    if !(m > 0.0 && m < FRAC_PI_2) {
        return Err(Error::DegenerateParameters(format!(
            "max angle {m:.9} must lie in (0, pi/2); choose a different eps_prime"
        )));
    }
    let closed_form = (2.0 * m).tan().abs() / m.tan();
    Ok(closed_form.min(2.0 * m.cos()) / (1.0 + half_kq(kappa, q0)))
}

fn check_q0(q0: f64) -> Result<()> {
    if !(q0 > 0.0 && q0.is_finite()) {
        return Err(Error::InvalidParameter(format!("preconditioner needs q0 > 0, got {q0}")));
    }
    Ok(())
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
    }
    Ok(())
}

fn choose_eps(eps: Option<f64>, eps_max: f64) -> Result<f64> {
    match eps {
        Some(e) if e > 0.0 && e.is_finite() => Ok(e),
        Some(e) => Err(Error::InvalidParameter(format!("eps must be positive, got {e}"))),
        None => Ok(DEFAULT_EPS_FRACTION * eps_max),
    }
}

/// Analytic parameters for a constant medium `q0 > 0`.
///
/// `eps_prime` defaults to `κq0 + 1` and `eps` to `0.9·eps_max`.
pub fn gamma_analytic(kappa: f64, q0: f64, eps_prime: Option<f64>, eps: Option<f64>) -> Result<PreconditionerParams> {
    check_kappa(kappa)?;
    check_q0(q0)?;
    let eps_prime = eps_prime.unwrap_or_else(|| default_eps_prime(kappa, q0));
    let alpha = alpha_from_eps_prime(kappa, q0, eps_prime)?;
    let eps_max = eps_bound(kappa, q0, alpha.max(eps_prime.atan()))?;
    let eps = choose_eps(eps, eps_max)?;
    Ok(PreconditionerParams {
        mode: Mode::Analytic,
        kappa,
        q0,
        eps_prime,
        alpha,
        eps_max,
        eps,
        gamma: Complex64::from_polar(eps, alpha),
        xi_plus: None,
        xi_minus: None,
    })
}

/// Analytic parameters for a general medium with `q ≥ 0`.
///
/// No locus is available, so the constant-medium recipe is applied with `q0`
/// replaced by `‖q‖₂/√L`, which reproduces the Hilbert–Schmidt bound of `V`.
/// This is a heuristic; [`transform_spectrum`] on the computed spectrum is
/// the actual check.
pub fn gamma_for_medium(
    problem: &WaveProblem,
    medium: &Medium,
    eps_prime: Option<f64>,
    eps: Option<f64>,
) -> Result<PreconditionerParams> {
    if let Some(q0) = medium.constant_value() {
        return gamma_analytic(problem.kappa(), q0, eps_prime, eps);
    }
    if medium.min_value() < 0.0 {
        return Err(Error::NotApplicable(
            "the preconditioner recipe for non-constant media requires q >= 0".into(),
        ));
    }
    let l = problem.length();
    let q_eff = 2.0 * hilbert_schmidt_bound(problem, medium) / (problem.k0() * l);
    gamma_analytic(problem.kappa(), q_eff, eps_prime, eps)
}

/// `(ξ+, ξ−)`: sup and inf of `arctan(Im z/Re z)` with `z = e^{iα}(1 − ω)` over
/// the locus samples, together with the `t → 0` limit `tan α`.
pub fn xi_numeric(locus: &SpectralLocus, alpha: f64) -> Result<(f64, f64)> {
    let rot = Complex64::from_polar(1.0, alpha);
    let mut sup = alpha.tan();
    let mut inf = sup;
    for s in &locus.samples {
        let z = rot * (1.0 - s.lambda);
        if !(z.re > 0.0) {
            return Err(Error::AngleWrap { re: z.re, t: s.t });
        }
        let r = z.im / z.re;
        sup = sup.max(r);
        inf = inf.min(r);
    }
    Ok((sup.atan(), inf.atan()))
}

/// Numeric-mode parameters: `α` from `ε′` as in the analytic recipe, and the
/// bound on `ε` from the sampled locus.
pub fn gamma_numeric(locus: &SpectralLocus, eps_prime: Option<f64>, eps: Option<f64>) -> Result<PreconditionerParams> {
    let (kappa, q0) = (locus.kappa, locus.q0);
    check_kappa(kappa)?;
    check_q0(q0)?;
    let eps_prime = eps_prime.unwrap_or_else(|| default_eps_prime(kappa, q0));
    let alpha = alpha_from_eps_prime(kappa, q0, eps_prime)?;
    let (xi_plus, xi_minus) = xi_numeric(locus, alpha)?;
    let eps_max = eps_bound(kappa, q0, xi_plus.abs().max(xi_minus.abs()))?;
    let eps = choose_eps(eps, eps_max)?;
    Ok(PreconditionerParams {
        mode: Mode::Numeric,
        kappa,
        q0,
        eps_prime,
        alpha,
        eps_max,
        eps,
        gamma: Complex64::from_polar(eps, alpha),
        xi_plus: Some(xi_plus),
        xi_minus: Some(xi_minus),
    })
}

/// `μ = 1 − γ(1 − λ)` for every point, and whether all `|μ| < 1`.
pub fn transform_spectrum(points: &[Complex64], gamma: Complex64) -> (Vec<Complex64>, bool) {
    let mu: Vec<Complex64> = points.iter().map(|&l| 1.0 - gamma * (1.0 - l)).collect();
    let inside = mu.iter().all(|m| m.norm() < 1.0);
    (mu, inside)
}

/// `M = (1 − γ)I + γA`
#[derive(Debug, Clone, Copy)]
pub struct PreconditionedOperator<A> {
    inner: A,
    gamma: Complex64,
}

impl<A: LinearOperator> PreconditionedOperator<A> {
    pub fn new(inner: A, gamma: Complex64) -> Self {
        Self { inner, gamma }
    }

    pub fn gamma(&self) -> Complex64 {
        self.gamma
    }
}

impl<A: LinearOperator> LinearOperator for PreconditionedOperator<A> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        self.inner.apply_into(x, out);
        let keep = 1.0 - self.gamma;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = keep * xi + self.gamma * *o;
        }
    }
}

/// Neumann series for `(I − M)u = γ·rhs`. The trace is relative to `‖γ·rhs‖`.
pub fn preconditioned_solve<A: LinearOperator>(
    op: A,
    gamma: Complex64,
    rhs: &[Complex64],
    opts: &IterateOptions,
    reference: Option<&[Complex64]>,
) -> Result<BornResult> {
    if gamma == Complex64::new(0.0, 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("gamma must be finite and nonzero, got {gamma}")));
    }
    let m = PreconditionedOperator::new(op, gamma);
    let start: Vec<Complex64> = rhs.iter().map(|z| gamma * z).collect();
    iterate(&m, &start, opts, reference)
}
