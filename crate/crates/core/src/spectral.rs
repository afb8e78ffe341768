//! Spectrum of the constant-medium operator `q0·V_1(k0)` on `]0, L[`.
//!
//! An eigenfunction has the form `φ(x) = A e^{ik0 s x} + B e^{−ik0 s x}` with
//! `λ = q0/(s² − 1)`. The impedance conditions at both ends force
//! `B = A(s+1)/(s−1)` and
//!
//! ```text
//! F(s) = e^{2iκs}(s − 1)² − (s + 1)² = 0,   κ = k0·L.
//! ```
//!
//! Taking moduli shows `Im s = t` must satisfy `t·sinh(κt) ≤ 1`, i.e.
//! `0 < t ≤ T(κ)`, and `Re s` is one of the two roots of a quadratic. This
//! gives the curves `S±(κ)` and, through `ω(t) = q0/(s(t)² − 1)`, a locus `Λ`
//! that contains every nonzero eigenvalue. The locus is only a necessary
//! condition; not every point of it is an eigenvalue.
//!
//! Only `t > 0` is sampled. Roots with `Im s < 0` give the same `λ` through
//! `s ↔ −s`, since `λ` depends on `s²` alone.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lippmann::{assemble, LSOperator};
use crate::numerics::{eigenvalues_dense, norm, LinearOperator};
use crate::problem::{make_grid, Incidence, Medium, QuadratureRule, WaveProblem};

/// Lower end of the sampled `t` range, relative to `T`.
pub const T_MIN_FRACTION: f64 = 1e-6;
/// Radicand values down to this are clamped to zero instead of rejected.
pub const RADICAND_TOL: f64 = -1e-14;

/// Unique positive root of `T·sinh(κT) = 1`.
pub fn solve_t(kappa: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter(format!("kappa must be positive and finite, got {kappa}")));
    }
    let f = |t: f64| t * (kappa * t).sinh() - 1.0;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..5 {
        let df = (kappa * t).sinh() + kappa * t * (kappa * t).cosh();
        let step = f(t) / df;
        t -= step;
        if step.abs() <= f64::EPSILON * t {
            break;
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "S-")]
    Minus,
    #[serde(rename = "S+")]
    Plus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Minus => -1.0,
            Branch::Plus => 1.0,
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::Minus => "S-",
            Branch::Plus => "S+",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocusSample {
    pub t: f64,
    pub branch: Branch,
    pub s: Complex64,
    pub lambda: Complex64,
}

/// Samples of `Λ(q0, κ)`, ordered as one polyline: `S−` with `t` increasing
/// up to `T`, then `S+` with `t` decreasing. The two branches meet at `t = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralLocus {
    pub kappa: f64,
    pub q0: f64,
    pub t_max: f64,
    pub samples: Vec<LocusSample>,
}

/// `s` on the given branch at parameter `t`, or `None` when the radicand is
/// negative beyond [`RADICAND_TOL`].
pub fn locus_point(kappa: f64, t: f64, branch: Branch) -> Option<Complex64> {
    let (sh, ch) = ((kappa * t).sinh(), (kappa * t).cosh());
    let radicand = 1.0 - t * t * sh * sh;
    if radicand < RADICAND_TOL {
        return None;
    }
    let re = (-ch + branch.sign() * radicand.max(0.0).sqrt()) / sh;
    Some(Complex64::new(re, t))
}

/// `ω = q0/(s² − 1)`
pub fn omega(q0: f64, s: Complex64) -> Complex64 {
    q0 / (s * s - 1.0)
}

/// Samples both branches at `count` geometrically spaced values of `t` in
/// `[T·1e−6, T]`.
pub fn sample_locus(kappa: f64, q0: f64, count: usize) -> Result<SpectralLocus> {
    if count < 2 {
        return Err(Error::InvalidParameter(format!("locus needs at least 2 samples, got {count}")));
    }
    if q0 == 0.0 || !q0.is_finite() {
        return Err(Error::InvalidParameter(format!("locus needs a finite nonzero q0, got {q0}")));
    }
    let t_max = solve_t(kappa)?;
    let t_min = t_max * T_MIN_FRACTION;
    let ratio = t_max / t_min;
    let ts: Vec<f64> = (0..count)
        .map(|k| {
            if k == count - 1 {
                t_max
            } else {
                t_min * ratio.powf(k as f64 / (count - 1) as f64)
            }
        })
        .collect();
    let mut samples = Vec::with_capacity(2 * count);
    let mut push = |t: f64, branch: Branch| {
        if let Some(s) = locus_point(kappa, t, branch) {
            samples.push(LocusSample {
                t,
                branch,
                s,
                lambda: omega(q0, s),
            });
        }
    };
    for &t in &ts {
        push(t, Branch::Minus);
    }
    for &t in ts.iter().rev() {
        push(t, Branch::Plus);
    }
    Ok(SpectralLocus {
        kappa,
        q0,
        t_max,
        samples,
    })
}

/// Minimum distance from each point to the polyline through the locus samples.
pub fn locus_distance(points: &[Complex64], locus: &SpectralLocus) -> Vec<f64> {
    let nodes: Vec<Complex64> = locus.samples.iter().map(|s| s.lambda).collect();
    points
        .iter()
        .map(|&p| {
            if nodes.len() == 1 {
                return (p - nodes[0]).norm();
            }
            nodes
                .windows(2)
                .map(|w| segment_distance(p, w[0], w[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len_sq = d.norm_sqr();
    if len_sq == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / len_sq).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioBoundReport {
    /// max over samples of `(Re ω − 1)/Im ω`.
    pub max_ratio: f64,
    /// `q0·κ/2`
    pub bound: f64,
    pub within_bound: bool,
    /// On each branch the ratio decreases over the 10 smallest `t` as `t`
    /// decreases, i.e. it heads to −∞.
    pub diverges_at_zero: bool,
}

impl RatioBoundReport {
    pub fn pass(&self) -> bool {
        self.within_bound && self.diverges_at_zero
    }
}

/// Checks `(Re ω(t) − 1)/Im ω(t) ≤ q0κ/2` along the locus.
pub fn ratio_bound_check(locus: &SpectralLocus) -> Result<RatioBoundReport> {
    if !(locus.q0 > 0.0) {
        return Err(Error::NotApplicable(format!("ratio bound needs q0 > 0, got {}", locus.q0)));
    }
    let ratio = |w: Complex64| (w.re - 1.0) / w.im;
    let bound = locus.q0 * locus.kappa / 2.0;
    let max_ratio = locus.samples.iter().map(|s| ratio(s.lambda)).fold(f64::NEG_INFINITY, f64::max);
    let diverges_at_zero = [Branch::Minus, Branch::Plus].iter().all(|&b| {
        let mut branch: Vec<&LocusSample> = locus.samples.iter().filter(|s| s.branch == b).collect();
        branch.sort_by(|x, y| x.t.total_cmp(&y.t));
        let head: Vec<f64> = branch.iter().take(10).map(|s| ratio(s.lambda)).collect();
        head.len() >= 2 && head.windows(2).all(|w| w[0] < w[1])
    });
    Ok(RatioBoundReport {
        max_ratio,
        bound,
        within_bound: max_ratio <= bound + 1e-10,
        diverges_at_zero,
    })
}

/// `F(s) = e^{2iκs}(s − 1)² − (s + 1)²`
pub fn transcendental(kappa: f64, s: Complex64) -> Complex64 {
    let e = (Complex64::new(0.0, 2.0 * kappa) * s).exp();
    e * (s - 1.0) * (s - 1.0) - (s + 1.0) * (s + 1.0)
}

fn transcendental_derivative(kappa: f64, s: Complex64) -> Complex64 {
    let e = (Complex64::new(0.0, 2.0 * kappa) * s).exp();
    let sm = s - 1.0;
    e * sm * (Complex64::new(0.0, 2.0 * kappa) * sm + 2.0) - 2.0 * (s + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenpairReport {
    pub lambda: Complex64,
    pub s: Complex64,
    /// ‖Vφ − λφ‖/‖φ‖ with the Nyström operator.
    pub residual: f64,
    pub a: Complex64,
    pub b: Complex64,
    /// |F(s)| at the accepted root.
    pub f_abs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranscendentalOptions {
    pub max_newton: usize,
    /// Accept a root when |F(s)| is at most this.
    pub f_tol: f64,
    /// Roots closer than this are merged.
    pub dedup_tol: f64,
    /// Grid size for the eigenfunction residual.
    pub residual_n: usize,
}

impl Default for TranscendentalOptions {
    fn default() -> Self {
        Self {
            max_newton: 60,
            f_tol: 1e-10,
            dedup_tol: 1e-8,
            residual_n: 2048,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscendentalResult {
    /// Sorted by decreasing |λ|.
    pub roots: Vec<EigenpairReport>,
    /// Seeds whose Newton iteration did not end on an admissible root.
    pub dropped_seeds: usize,
}

/// Newton refinement of `F` from one seed.
pub fn newton_root(kappa: f64, seed: Complex64, max_iter: usize) -> Option<Complex64> {
    let mut s = seed;
    for _ in 0..max_iter {
        let d = transcendental_derivative(kappa, s);
        if d == Complex64::new(0.0, 0.0) || !d.is_finite() {
            return None;
        }
        let step = transcendental(kappa, s) / d;
        s -= step;
        if !s.is_finite() {
            return None;
        }
        if step.norm() <= 4.0 * f64::EPSILON * (1.0 + s.norm()) {
            return Some(s);
        }
    }
    Some(s)
}

/// Roots of `F` reached by Newton from `seeds`, keeping `Im s > 0` and
/// discarding the trivial root `s = 0` (for which `φ ≡ 0`). Each root's
/// eigenfunction is checked against the Nyström operator with `k0 = κ`,
/// `L = 1`; the spectrum depends on `κ` only.
pub fn eig_transcendental(
    kappa: f64,
    q0: f64,
    seeds: &[Complex64],
    opts: &TranscendentalOptions,
) -> Result<TranscendentalResult> {
    if q0 == 0.0 || !q0.is_finite() {
        return Err(Error::InvalidParameter(format!("q0 must be finite and nonzero, got {q0}")));
    }
    let mut roots: Vec<Complex64> = Vec::new();
    let mut dropped = 0;
    for &seed in seeds {
        let accepted = newton_root(kappa, seed, opts.max_newton)
            .filter(|s| s.im > 0.0 && s.norm() > opts.dedup_tol)
            .filter(|s| transcendental(kappa, *s).norm() <= opts.f_tol);
        match accepted {
            Some(s) => {
                if roots.iter().all(|r| (r - s).norm() > opts.dedup_tol) {
                    roots.push(s);
                }
            }
            None => dropped += 1,
        }
    }

    let op = constant_operator(kappa, q0, opts.residual_n)?;
    let mut reports: Vec<EigenpairReport> = roots
        .into_iter()
        .map(|s| {
            let lambda = omega(q0, s);
            let a = Complex64::new(1.0, 0.0);
            let b = a * (s + 1.0) / (s - 1.0);
            EigenpairReport {
                lambda,
                s,
                residual: eigenfunction_residual(&op, kappa, s, a, b, lambda),
                a,
                b,
                f_abs: transcendental(kappa, s).norm(),
            }
        })
        .collect();
    reports.sort_by(|x, y| y.lambda.norm().total_cmp(&x.lambda.norm()));
    Ok(TranscendentalResult {
        roots: reports,
        dropped_seeds: dropped,
    })
}

/// `s` values of the locus samples with `|λ| ≥ min_abs_lambda`, as Newton seeds.
pub fn locus_seeds(locus: &SpectralLocus, min_abs_lambda: f64) -> Vec<Complex64> {
    locus
        .samples
        .iter()
        .filter(|s| s.lambda.norm() >= min_abs_lambda)
        .map(|s| s.s)
        .collect()
}

fn constant_operator(kappa: f64, q0: f64, n: usize) -> Result<LSOperator> {
    let problem = WaveProblem::new(kappa, 1.0, Incidence::Left, n)?;
    let grid = make_grid(&problem, QuadratureRule::Midpoint)?;
    assemble(&problem, &Medium::constant(q0), &grid)
}

fn eigenfunction_residual(op: &LSOperator, kappa: f64, s: Complex64, a: Complex64, b: Complex64, lambda: Complex64) -> f64 {
    let ik = Complex64::new(0.0, kappa) * s;
    let phi: Vec<Complex64> = op
        .grid()
        .nodes()
        .iter()
        .map(|&x| a * (ik * x).exp() + b * (-ik * x).exp())
        .collect();
    let v_phi = op.apply(&phi);
    let diff: Vec<Complex64> = v_phi.iter().zip(&phi).map(|(v, p)| v - lambda * p).collect();
    norm(&diff) / norm(&phi)
}

/// All eigenvalues of the assembled matrix, largest magnitude first.
pub fn numeric_spectrum(op: &LSOperator) -> Result<Vec<Complex64>> {
    let mut ev = eigenvalues_dense(op.matrix())?;
    ev.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_residual_is_tiny() {
        for kappa in [0.1, 1.0, 2.0, 10.0, 50.0] {
            let t = solve_t(kappa).unwrap();
            assert!((t * (kappa * t).sinh() - 1.0).abs() <= 1e-12, "kappa={kappa}");
        }
        assert!(solve_t(0.0).is_err());
        assert!(solve_t(f64::NAN).is_err());
    }

    #[test]
    fn branches_meet_at_threshold() {
        let t = solve_t(3.0).unwrap();
        let m = locus_point(3.0, t, Branch::Minus).unwrap();
        let p = locus_point(3.0, t, Branch::Plus).unwrap();
        assert!((m - p).norm() < 1e-6);
        assert!(locus_point(3.0, 1.01 * t, Branch::Minus).is_none());
    }

    #[test]
    fn samples_satisfy_locus_invariants() {
        let locus = sample_locus(1.0, 5.0, 500).unwrap();
        assert_eq!(locus.samples.len(), 1000);
        for s in &locus.samples {
            assert_eq!(s.s.im, s.t);
            assert!(s.t > 0.0 && s.t <= locus.t_max);
            assert!(1.0 - (s.t * s.t) * (locus.kappa * s.t).sinh().powi(2) >= RADICAND_TOL);
            assert!(s.lambda.im != 0.0);
            assert_eq!(omega(5.0, -s.s), s.lambda);
        }
    }

    #[test]
    fn minus_branch_accumulates_at_zero() {
        let locus = sample_locus(2.0, 10.0, 200).unwrap();
        let first = locus.samples.first().unwrap();
        assert_eq!(first.branch, Branch::Minus);
        assert!(first.lambda.norm() < 1e-8);
    }

    #[test]
    fn rejects_degenerate_locus_requests() {
        assert!(sample_locus(1.0, 0.0, 10).is_err());
        assert!(sample_locus(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn distance_to_locus_points() {
        let locus = sample_locus(1.0, 5.0, 300).unwrap();
        let pts: Vec<Complex64> = locus.samples.iter().step_by(37).map(|s| s.lambda).collect();
        assert!(locus_distance(&pts, &locus).iter().all(|d| *d == 0.0));
        let far = locus_distance(&[Complex64::new(100.0, 0.0)], &locus)[0];
        assert!(far >= 99.0);
    }

    #[test]
    fn segment_distance_cases() {
        let a = Complex64::new(0.0, 0.0);
        let b = Complex64::new(2.0, 0.0);
        assert_eq!(segment_distance(Complex64::new(1.0, 3.0), a, b), 3.0);
        assert_eq!(segment_distance(Complex64::new(-3.0, 4.0), a, b), 5.0);
        assert_eq!(segment_distance(Complex64::new(1.0, 1.0), a, a), 2f64.sqrt());
    }

    #[test]
    fn ratio_bound_requires_positive_q0() {
        let locus = sample_locus(1.0, -0.5, 100).unwrap();
        assert!(ratio_bound_check(&locus).is_err());
    }

    #[test]
    fn transcendental_derivative_matches_difference_quotient() {
        let s = Complex64::new(-1.3, 0.4);
        let h = 1e-6;
        let fd = (transcendental(2.0, s + h) - transcendental(2.0, s - h)) / (2.0 * h);
        assert!((fd - transcendental_derivative(2.0, s)).norm() < 1e-6);
    }

    #[test]
    fn zero_is_a_trivial_root() {
        assert_eq!(transcendental(1.7, Complex64::new(0.0, 0.0)).norm(), 0.0);
        let r = eig_transcendental(1.0, 5.0, &[Complex64::new(1e-3, 1e-3)], &TranscendentalOptions { residual_n: 16, ..Default::default() }).unwrap();
        assert!(r.roots.is_empty());
        assert_eq!(r.dropped_seeds, 1);
    }
}
