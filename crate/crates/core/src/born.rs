//! Born (Neumann) series for `(I − A)u = ψ`.
//!
//! The partial sums are `S_n = Σ_{j≤n} Aʲψ`. The series converges for a
//! given `ψ` exactly when `‖Aⁿψ‖ → 0`, so that sequence is the monitor. The
//! engine works on any [`LinearOperator`], which lets synthetic diagonal
//! operators exercise the same code as the discretized integral operator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{arnoldi, eigenvalues_dense, norm, ComplexField, DenseMatrix, LinearOperator, LuFactors};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Converged,
    Diverged,
    Undecided,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Converged => "converged",
            Verdict::Diverged => "diverged",
            Verdict::Undecided => "undecided",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateOptions {
    pub max_iter: usize,
    /// Relative tolerance on the monitor and the residual, against ‖ψ‖.
    pub tol: f64,
    /// Divergence is declared once the monitor exceeds `guard·‖ψ‖`.
    pub guard: f64,
    /// Consecutive increases of the monitor, above its initial value, that
    /// count as divergence.
    pub growth_window: usize,
    /// Only every `record_every`-th step is stored in the trace, plus the
    /// final one. Residuals are evaluated at stored steps only, which halves
    /// the cost per step for long runs.
    pub record_every: usize,
}

impl Default for IterateOptions {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: 1e-8,
            guard: 1e8,
            growth_window: 20,
            record_every: 1,
        }
    }
}

impl IterateOptions {
    pub fn new(max_iter: usize, tol: f64) -> Self {
        Self {
            max_iter,
            tol,
            ..Default::default()
        }
    }

    pub fn with_record_every(self, record_every: usize) -> Self {
        Self { record_every, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.guard > 1.0) {
            return Err(Error::InvalidParameter(format!("divergence guard must exceed 1, got {}", self.guard)));
        }
        if self.growth_window == 0 || self.record_every == 0 {
            return Err(Error::InvalidParameter("growth window and record stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// One row of a [`ConvergenceTrace`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub n: usize,
    /// ‖Aⁿψ‖
    pub monitor: f64,
    /// ‖(I − A)S_n − ψ‖
    pub residual: f64,
    /// ‖u − S_n‖ when a reference solution was supplied.
    pub err_vs_ref: Option<f64>,
    /// ‖(ψ + A·S_n) − S_{n+1}‖ / ‖S_{n+1}‖: disagreement between the two
    /// forms of the recursion. Absent on the final step.
    pub recursion_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub steps: Vec<TraceStep>,
    pub verdict: Verdict,
    pub iterations: usize,
    pub psi_norm: f64,
    pub options: IterateOptions,
    pub diagnostic: Option<String>,
}

impl ConvergenceTrace {
    pub fn monitors(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.monitor)
    }

    pub fn last(&self) -> Option<&TraceStep> {
        self.steps.last()
    }

    pub fn final_residual(&self) -> f64 {
        self.last().map_or(f64::NAN, |s| s.residual)
    }

    pub fn max_recursion_gap(&self) -> f64 {
        self.steps.iter().filter_map(|s| s.recursion_gap).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct BornResult {
    pub trace: ConvergenceTrace,
    /// Last partial sum computed.
    pub solution: ComplexField,
}

/// Runs `S_{n+1} = S_n + A^{n+1}ψ` until the monitor and the residual both
/// drop below `tol·‖ψ‖`, or divergence is detected, or `max_iter` steps pass.
///
/// Each step costs two applications of `A`: one advances `Aⁿψ`, the other
/// gives the residual of the current partial sum.
pub fn iterate<A: LinearOperator + ?Sized>(
    op: &A,
    psi: &[Complex64],
    opts: &IterateOptions,
    reference: Option<&[Complex64]>,
) -> Result<BornResult> {
    opts.validate()?;
    let dim = op.dim();
    if psi.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: psi.len(),
        });
    }
    if let Some(r) = reference {
        if r.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: r.len(),
            });
        }
    }

    let psi_norm = norm(psi);
    let threshold = opts.tol * psi_norm;
    let mut term = psi.to_vec();
    let mut sum = psi.to_vec();
    let mut next = vec![Complex64::new(0.0, 0.0); dim];
    let mut a_sum = vec![Complex64::new(0.0, 0.0); dim];
    let mut steps: Vec<TraceStep> = Vec::new();
    let mut tracker = GrowthTracker::default();
    let mut verdict = Verdict::Undecided;
    let mut diagnostic = None;
    let mut final_n = 0;

    for n in 0..=opts.max_iter {
        final_n = n;
        let monitor = norm(&term);
        if !monitor.is_finite() {
            verdict = Verdict::Diverged;
            diagnostic = Some(format!("non-finite value at step {n}"));
            steps.push(TraceStep {
                n,
                monitor,
                residual: f64::NAN,
                err_vs_ref: None,
                recursion_gap: None,
            });
            break;
        }
        let record = n % opts.record_every == 0 || monitor <= threshold || n == opts.max_iter;
        let mut residual = f64::NAN;
        if record {
            op.apply_into(&sum, &mut a_sum);
            residual = sum
                .iter()
                .zip(psi)
                .zip(&a_sum)
                .map(|((s, p), a)| (s - p - a).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let err_vs_ref = reference.map(|u| u.iter().zip(&sum).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt());
            steps.push(TraceStep {
                n,
                monitor,
                residual,
                err_vs_ref,
                recursion_gap: None,
            });
            if !residual.is_finite() {
                verdict = Verdict::Diverged;
                diagnostic = Some(format!("non-finite residual at step {n}"));
                break;
            }
        }

        if let Some(v) = classify_step(monitor, record.then_some(residual), psi_norm, opts, &mut tracker) {
            verdict = v;
            if v == Verdict::Diverged {
                diagnostic = Some(tracker.reason(monitor, psi_norm, opts));
                if !record {
                    steps.push(TraceStep {
                        n,
                        monitor,
                        residual: f64::NAN,
                        err_vs_ref: None,
                        recursion_gap: None,
                    });
                }
            }
            break;
        }
        if n == opts.max_iter {
            break;
        }

        op.apply_into(&term, &mut next);
        std::mem::swap(&mut term, &mut next);
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
        if record {
            let gap = sum
                .iter()
                .zip(psi.iter().zip(&a_sum))
                .map(|(s, (p, a))| (p + a - s).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let sum_norm = norm(&sum);
            if let Some(last) = steps.last_mut() {
                last.recursion_gap = Some(if sum_norm > 0.0 { gap / sum_norm } else { gap });
            }
        }
    }

    let iterations = final_n.max(1);
    Ok(BornResult {
        trace: ConvergenceTrace {
            steps,
            verdict,
            iterations,
            psi_norm,
            options: *opts,
            diagnostic,
        },
        solution: sum.into(),
    })
}

#[derive(Debug, Default)]
struct GrowthTracker {
    initial: Option<f64>,
    previous: f64,
    run: usize,
}

impl GrowthTracker {
    fn reason(&self, monitor: f64, psi_norm: f64, opts: &IterateOptions) -> String {
        if monitor > opts.guard * psi_norm {
            format!("monitor {monitor:.3e} exceeded guard {:.1e}·‖ψ‖", opts.guard)
        } else {
            format!("monitor grew for {} consecutive steps", self.run)
        }
    }
}

/// Verdict after one more monitor value, or `None` to keep going.
fn classify_step(
    monitor: f64,
    residual: Option<f64>,
    psi_norm: f64,
    opts: &IterateOptions,
    tracker: &mut GrowthTracker,
) -> Option<Verdict> {
    let threshold = opts.tol * psi_norm;
    if monitor <= threshold && residual.is_some_and(|r| r <= threshold) {
        return Some(Verdict::Converged);
    }
    if monitor > opts.guard * psi_norm {
        return Some(Verdict::Diverged);
    }
    let initial = *tracker.initial.get_or_insert(monitor);
    if monitor > tracker.previous && monitor > initial {
        tracker.run += 1;
    } else {
        tracker.run = 0;
    }
    tracker.previous = monitor;
    (tracker.run >= opts.growth_window).then_some(Verdict::Diverged)
}

/// Re-derives the verdict from the recorded monitor and residual sequences.
///
/// With `record_every = 1` this reproduces the verdict of [`iterate`]
/// exactly. With a coarser stride the growth window is counted over stored
/// steps only, so only the guard and convergence tests are exact.
pub fn suzuki_verdict(trace: &ConvergenceTrace) -> Verdict {
    let mut tracker = GrowthTracker::default();
    for s in &trace.steps {
        if !s.monitor.is_finite() {
            return Verdict::Diverged;
        }
        let residual = (!s.residual.is_nan()).then_some(s.residual);
        if residual.is_some_and(|r| !r.is_finite()) {
            return Verdict::Diverged;
        }
        if let Some(v) = classify_step(s.monitor, residual, trace.psi_norm, &trace.options, &mut tracker) {
            return v;
        }
    }
    Verdict::Undecided
}

/// Constant of the a-posteriori bound `‖u − S_n‖ ≤ C‖Aⁿψ‖`, estimated on the
/// Krylov space of `ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    /// Largest Ritz value magnitude.
    pub spr0: f64,
    /// ‖(I − H)⁻¹‖·‖H‖ for the projection `H`; infinite when `I − H` is singular.
    pub c: f64,
    pub krylov_order: usize,
    /// The Krylov space was exhausted, so `H` is exact on it.
    pub exact: bool,
}

/// Rate estimate from an order-`m` Arnoldi projection.
pub fn rate_estimate<A: LinearOperator + ?Sized>(op: &A, psi: &[Complex64], m: usize) -> Result<RateEstimate> {
    if m == 0 {
        return Err(Error::InvalidParameter("Krylov order must be at least 1".into()));
    }
    let ar = arnoldi(op, psi, m.min(op.dim()))?;
    let h = &ar.hessenberg;
    let spr0 = eigenvalues_dense(h)?.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let shifted = DenseMatrix::identity(h.rows()).add_scaled(Complex64::new(-1.0, 0.0), h)?;
    let c = match LuFactors::factorize(&shifted) {
        Ok(lu) => lu.inverse()?.spectral_norm()? * h.spectral_norm()?,
        Err(Error::SingularMatrix { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    Ok(RateEstimate {
        spr0,
        c,
        krylov_order: ar.order(),
        exact: ar.breakdown,
    })
}

pub const DEFAULT_KRYLOV_ORDER: usize = 64;

/// [`rate_estimate`] starting at order 64 and doubling until `spr0` moves by
/// less than 1e−6, the Krylov space is exhausted, or the order reaches `n`.
pub fn rate_estimate_auto<A: LinearOperator + ?Sized>(op: &A, psi: &[Complex64]) -> Result<RateEstimate> {
    let n = op.dim();
    let mut m = DEFAULT_KRYLOV_ORDER.min(n);
    let mut est = rate_estimate(op, psi, m)?;
    while !est.exact && m < n {
        m = (2 * m).min(n);
        let refined = rate_estimate(op, psi, m)?;
        let settled = (refined.spr0 - est.spr0).abs() < 1e-6;
        est = refined;
        if settled {
            break;
        }
    }
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBoundReport {
    /// max ‖u − S_n‖ / ‖Aⁿψ‖ over the steps considered.
    pub max_ratio: f64,
    pub c: f64,
    pub steps_checked: usize,
    pub pass: bool,
}

pub const TAIL_BURN_IN: usize = 3;
pub const TAIL_SLACK: f64 = 0.1;

/// Checks `‖u − S_n‖ ≤ (1 + 0.1)·C·‖Aⁿψ‖` for every step past the burn-in.
///
/// The trace must carry errors against a reference solution. Steps whose
/// monitor is below 1e−12·‖ψ‖ are skipped: there the ratio measures the
/// reference solution's rounding error rather than the series tail.
pub fn tail_bound_check(trace: &ConvergenceTrace, rate: &RateEstimate) -> Result<TailBoundReport> {
    if trace.verdict != Verdict::Converged {
        return Err(Error::NotApplicable(format!(
            "tail bound needs a converged trace, verdict was {}",
            trace.verdict
        )));
    }
    let floor = 1e-12 * trace.psi_norm;
    let mut max_ratio: f64 = 0.0;
    let mut steps_checked = 0;
    for s in trace.steps.iter().filter(|s| s.n >= TAIL_BURN_IN && s.monitor > floor) {
        let err = s
            .err_vs_ref
            .ok_or_else(|| Error::NotApplicable("trace has no reference errors".into()))?;
        max_ratio = max_ratio.max(err / s.monitor);
        steps_checked += 1;
    }
    Ok(TailBoundReport {
        max_ratio,
        c: rate.c,
        steps_checked,
        pass: max_ratio <= (1.0 + TAIL_SLACK) * rate.c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DiagonalOperator;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn zero_operator_converges_in_one_step() {
        let a = DiagonalOperator::from_real(&[0.0, 0.0]);
        let psi = [c(1.0), c(-2.0)];
        let r = iterate(&a, &psi, &IterateOptions::default(), None).unwrap();
        assert_eq!(r.trace.verdict, Verdict::Converged);
        assert_eq!(r.trace.iterations, 1);
        assert_eq!(r.solution.as_slice(), &psi);
    }

    #[test]
    fn contractive_component_sums_geometric_series() {
        let a = DiagonalOperator::from_real(&[2.0, 0.5]);
        let r = iterate(&a, &[c(0.0), c(1.0)], &IterateOptions::new(200, 1e-14), None).unwrap();
        assert_eq!(r.trace.verdict, Verdict::Converged);
        assert!((r.solution[1] - c(2.0)).norm() < 1e-13);
        assert_eq!(r.solution[0], c(0.0));
        assert_eq!(suzuki_verdict(&r.trace), Verdict::Converged);
    }

    #[test]
    fn expanding_component_diverges() {
        let a = DiagonalOperator::from_real(&[2.0, 0.5]);
        let r = iterate(&a, &[c(1.0), c(0.0)], &IterateOptions::new(1000, 1e-10), None).unwrap();
        assert_eq!(r.trace.verdict, Verdict::Diverged);
        assert!(r.trace.diagnostic.is_some());
        // 2ⁿ passes 2^20 > initial after 20 doubling steps, well before the guard.
        assert_eq!(r.trace.iterations, 20);
        assert_eq!(suzuki_verdict(&r.trace), Verdict::Diverged);
    }

    #[test]
    fn guard_triggers_before_growth_window() {
        let a = DiagonalOperator::from_real(&[1e3]);
        let r = iterate(&a, &[c(1.0)], &IterateOptions::new(100, 1e-10), None).unwrap();
        assert_eq!(r.trace.verdict, Verdict::Diverged);
        assert_eq!(r.trace.iterations, 3);
    }

    #[test]
    fn unit_modulus_is_undecided() {
        let a = DiagonalOperator::new(vec![Complex64::from_polar(1.0, 0.3)]);
        let r = iterate(&a, &[c(1.0)], &IterateOptions::new(50, 1e-10), None).unwrap();
        assert_eq!(r.trace.verdict, Verdict::Undecided);
        assert_eq!(r.trace.steps.len(), 51);
        assert_eq!(suzuki_verdict(&r.trace), Verdict::Undecided);
    }

    #[test]
    fn non_finite_is_divergence() {
        let a = DiagonalOperator::from_real(&[f64::NAN]);
        let r = iterate(&a, &[c(1.0)], &IterateOptions::default(), None).unwrap();
        assert_eq!(r.trace.verdict, Verdict::Diverged);
        assert!(r.trace.diagnostic.unwrap().contains("non-finite"));
    }

    #[test]
    fn zero_rhs_converges_immediately() {
        let a = DiagonalOperator::from_real(&[5.0, 3.0]);
        let r = iterate(&a, &[c(0.0), c(0.0)], &IterateOptions::default(), None).unwrap();
        assert_eq!(r.trace.verdict, Verdict::Converged);
        assert_eq!(r.trace.iterations, 1);
    }

    #[test]
    fn rejects_bad_options() {
        let a = DiagonalOperator::from_real(&[0.5]);
        assert!(iterate(&a, &[c(1.0)], &IterateOptions::new(0, 1e-8), None).is_err());
        assert!(iterate(&a, &[c(1.0)], &IterateOptions::new(10, 0.0), None).is_err());
        assert!(iterate(&a, &[c(1.0), c(1.0)], &IterateOptions::default(), None).is_err());
    }

    #[test]
    fn rate_estimate_on_invariant_line() {
        let a = DiagonalOperator::from_real(&[2.0, 0.5]);
        let r = rate_estimate(&a, &[c(0.0), c(1.0)], 2).unwrap();
        assert!(r.exact);
        assert_eq!(r.krylov_order, 1);
        assert!((r.spr0 - 0.5).abs() < 1e-14);
        assert!((r.c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_tail_bound_ratio_is_one() {
        let a = DiagonalOperator::from_real(&[0.5]);
        let reference = [c(2.0)];
        let r = iterate(&a, &[c(1.0)], &IterateOptions::new(100, 1e-13), Some(&reference)).unwrap();
        let rate = rate_estimate(&a, &[c(1.0)], 1).unwrap();
        let rep = tail_bound_check(&r.trace, &rate).unwrap();
        assert!(rep.pass);
        assert!((rep.max_ratio - 1.0).abs() < 1e-9);
        assert!((rep.c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tail_bound_rejects_diverged_trace() {
        let a = DiagonalOperator::from_real(&[3.0]);
        let r = iterate(&a, &[c(1.0)], &IterateOptions::default(), Some(&[c(-0.5)])).unwrap();
        let rate = rate_estimate(&a, &[c(1.0)], 1).unwrap();
        assert!(matches!(tail_bound_check(&r.trace, &rate), Err(Error::NotApplicable(_))));
    }

    fn diag_case() -> impl Strategy<Value = (Vec<Complex64>, Vec<Complex64>)> {
        let eig = (0.0..0.9f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t));
        let comp = (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex64::new(a, b));
        (prop::collection::vec(eig, 1..8), prop::collection::vec(comp, 8))
    }

    proptest! {
        #[test]
        fn recursion_forms_agree((eig, comp) in diag_case()) {
            let n = eig.len();
            let a = DiagonalOperator::new(eig);
            let r = iterate(&a, &comp[..n], &IterateOptions::new(500, 1e-12), None).unwrap();
            prop_assert!(r.trace.max_recursion_gap() <= 1e-12);
        }

        #[test]
        fn normal_operator_monitor_decays_at_rate_r0((eig, comp) in diag_case()) {
            let n = eig.len();
            let r0 = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let a = DiagonalOperator::new(eig);
            let r = iterate(&a, &comp[..n], &IterateOptions::new(500, 1e-12), None).unwrap();
            let m: Vec<f64> = r.trace.monitors().collect();
            for w in m.windows(2).filter(|w| w[0] > 0.0) {
                prop_assert!(w[1] / w[0] <= r0 + 1e-10);
            }
        }

        #[test]
        fn converged_residual_within_contract((eig, comp) in diag_case()) {
            let n = eig.len();
            let a = DiagonalOperator::new(eig);
            let opts = IterateOptions::new(500, 1e-10);
            let r = iterate(&a, &comp[..n], &opts, None).unwrap();
            prop_assert_eq!(r.trace.verdict, Verdict::Converged);
            prop_assert!(r.trace.final_residual() <= opts.tol * r.trace.psi_norm);
        }
    }
}
