use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use lsborn::born::{iterate, rate_estimate_auto, suzuki_verdict, tail_bound_check, IterateOptions, Verdict};
use lsborn::io;
use lsborn::lippmann::{
    assemble, direct_solve, fd_oracle, hilbert_schmidt_bound, incident_rhs, operator_norm_with, spectral_radius,
    LSOperator, NormOptions,
};
use lsborn::numerics::ComplexField;
use lsborn::precond::{gamma_for_medium, gamma_numeric, preconditioned_solve, transform_spectrum};
use lsborn::problem::make_grid;
use lsborn::spectral::{locus_distance, numeric_spectrum, ratio_bound_check, sample_locus};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::CliError;

/// Locus samples per branch.
pub const LOCUS_SAMPLES: usize = 4000;
/// Eigenvalues closer to the origin than this are left out of the locus
/// distance: they accumulate at zero, where the locus ends.
pub const DISTANCE_FLOOR: f64 = 0.05;

/// Outcome of one command: its JSON summary and whether every check passed.
pub struct Report {
    pub summary: Value,
    pub assertion_failure: Option<String>,
}

impl Report {
    fn ok(summary: Value) -> Self {
        Report {
            summary,
            assertion_failure: None,
        }
    }
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out_dir.join(name)
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut f = io::create(path)?;
    serde_json::to_writer_pretty(&mut f, value).map_err(std::io::Error::from)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn write_csv(path: &Path, f: impl FnOnce(&mut fs::File) -> lsborn::Result<()>) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut file = fs::File::create(path)?;
    f(&mut file)?;
    Ok(())
}

fn operator(cfg: &RunConfig) -> Result<LSOperator, CliError> {
    let problem = cfg.problem()?;
    let grid = make_grid(&problem, cfg.rule)?;
    Ok(assemble(&problem, &cfg.medium_value, &grid)?)
}

/// ‖a − b‖/‖b‖, or the absolute difference when `b` vanishes.
fn relative_l2(a: &[lsborn::Complex64], b: &[lsborn::Complex64]) -> f64 {
    let diff = ComplexField::from(a.to_vec()).distance(b);
    let scale = lsborn::numerics::norm(b);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

fn summary(cfg: &RunConfig, results: impl Serialize) -> Value {
    json!({ "config": cfg, "results": results })
}

pub fn spectrum(cfg: &RunConfig) -> Result<Report, CliError> {
    let q0 = cfg.require_constant("spectrum")?;
    if q0 == 0.0 {
        return Err(CliError::Validation("q0 != 0 is required for the eigenvalue locus".into()));
    }
    let op = operator(cfg)?;
    let locus = sample_locus(cfg.kappa(), q0, LOCUS_SAMPLES)?;
    let eigenvalues = numeric_spectrum(&op)?;
    let away: Vec<_> = eigenvalues.iter().copied().filter(|z| z.norm() > DISTANCE_FLOOR).collect();
    let max_locus_distance = locus_distance(&away, &locus).into_iter().fold(0.0, f64::max);
    let min_im_lambda = away.iter().map(|z| z.im).fold(f64::INFINITY, f64::min);
    let spr_estimate = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let ratio = ratio_bound_check(&locus).ok();

    write_csv(&out_path(cfg, "locus.csv"), |f| io::write_locus(f, &locus))?;
    write_csv(&out_path(cfg, "spectrum.csv"), |f| io::write_spectrum(f, &eigenvalues))?;
    let s = summary(
        cfg,
        json!({
            "T": locus.t_max,
            "kappa": cfg.kappa(),
            "max_locus_distance": max_locus_distance,
            "min_im_lambda": if away.is_empty() { None } else { Some(min_im_lambda) },
            "spr_estimate": spr_estimate,
            "eigenvalues": eigenvalues.len(),
            "eigenvalues_compared": away.len(),
            "distance_floor": DISTANCE_FLOOR,
            "locus_samples": locus.samples.len(),
            "ratio_bound": ratio,
        }),
    );
    write_json(&out_path(cfg, "summary.json"), &s)?;
    Ok(Report::ok(s))
}

pub fn born(cfg: &RunConfig) -> Result<Report, CliError> {
    let op = operator(cfg)?;
    let psi = incident_rhs(&op);
    let u = direct_solve(&op, &psi)?;
    let opts = IterateOptions::new(cfg.max_iter, cfg.tol).with_record_every(cfg.record_every);
    let result = iterate(&op, &psi, &opts, Some(&u))?;
    let trace = &result.trace;
    let rate = if psi.norm() > 0.0 {
        Some(rate_estimate_auto(&op, &psi)?)
    } else {
        None
    };
    let tail = match (&rate, trace.verdict) {
        (Some(r), Verdict::Converged) => tail_bound_check(trace, r).ok(),
        _ => None,
    };

    write_csv(&out_path(cfg, "trace.csv"), |f| io::write_trace(f, trace))?;
    let s = summary(
        cfg,
        json!({
            "verdict": trace.verdict,
            "suzuki_verdict": suzuki_verdict(trace),
            "iterations": trace.iterations,
            "psi_norm": trace.psi_norm,
            "final_monitor": trace.last().map(|s| s.monitor),
            "final_residual": trace.final_residual(),
            "spr0": rate.map(|r| r.spr0),
            "C": rate.map(|r| r.c),
            "krylov_order": rate.map(|r| r.krylov_order),
            "final_err_vs_direct": relative_l2(&result.solution, &u),
            "tail_bound": tail,
        }),
    );
    write_json(&out_path(cfg, "summary.json"), &s)?;
    Ok(Report::ok(s))
}

pub fn precond(cfg: &RunConfig) -> Result<Report, CliError> {
    let op = operator(cfg)?;
    let params = if cfg.numeric_xi {
        let q0 = cfg.require_constant("--numeric-xi")?;
        gamma_numeric(&sample_locus(cfg.kappa(), q0, LOCUS_SAMPLES)?, cfg.eps_prime, cfg.eps)?
    } else {
        gamma_for_medium(op.problem(), &cfg.medium_value, cfg.eps_prime, cfg.eps)?
    };
    let eigenvalues = numeric_spectrum(&op)?;
    let (mu, all_inside) = transform_spectrum(&eigenvalues, params.gamma);
    let max_abs_mu = mu.iter().map(|z| z.norm()).fold(0.0, f64::max);
    write_csv(&out_path(cfg, "mu.csv"), |f| io::write_mu(f, &mu))?;

    // Outside the unit disk the series cannot converge, so it is not run.
    let mut solve = None;
    if all_inside {
        let psi = incident_rhs(&op);
        let u = direct_solve(&op, &psi)?;
        let opts = IterateOptions::new(cfg.max_iter, cfg.tol).with_record_every(cfg.record_every);
        let result = preconditioned_solve(&op, params.gamma, &psi, &opts, Some(&u))?;
        write_csv(&out_path(cfg, "trace.csv"), |f| io::write_trace(f, &result.trace))?;
        solve = Some(json!({
            "verdict": result.trace.verdict,
            "iterations": result.trace.iterations,
            "final_monitor": result.trace.last().map(|s| s.monitor),
            "final_residual": result.trace.final_residual(),
            "final_err_vs_direct": relative_l2(&result.solution, &u),
        }));
    }
    let verdict = solve.as_ref().map(|s| s["verdict"].clone());
    let s = summary(
        cfg,
        json!({
            "params": params,
            "admissible": params.admissible(),
            "all_inside": all_inside,
            "max_abs_mu": max_abs_mu,
            "eigenvalues": eigenvalues.len(),
            "solve": solve,
        }),
    );
    write_json(&out_path(cfg, "params.json"), &s)?;
    let assertion_failure = if !all_inside {
        Some(format!("transformed spectrum leaves the unit disk: max |mu| = {max_abs_mu}"))
    } else if verdict != Some(json!(Verdict::Converged)) {
        Some(format!("preconditioned series did not converge: {}", verdict.unwrap_or(Value::Null)))
    } else {
        None
    };
    Ok(Report {
        summary: s,
        assertion_failure,
    })
}

pub fn solve(cfg: &RunConfig) -> Result<Report, CliError> {
    let op = operator(cfg)?;
    let psi = incident_rhs(&op);
    let u = direct_solve(&op, &psi)?;
    write_csv(&out_path(cfg, "u.csv"), |f| io::write_field(f, op.grid().nodes(), &u))?;
    let mut oracle = None;
    if cfg.oracle {
        let fd = fd_oracle(op.problem(), &cfg.medium_value, op.grid(), cfg.fd_points)?;
        let o = json!({ "fd_points": cfg.fd_points, "rel_l2_err": relative_l2(&fd, &u) });
        write_json(&out_path(cfg, "oracle.json"), &summary(cfg, &o))?;
        oracle = Some(o);
    }
    let s = summary(
        cfg,
        json!({
            "u_norm": cfg_l2(&op, &u),
            "psi_norm": cfg_l2(&op, &psi),
            "oracle": oracle,
        }),
    );
    write_json(&out_path(cfg, "summary.json"), &s)?;
    Ok(Report::ok(s))
}

fn cfg_l2(op: &LSOperator, v: &[lsborn::Complex64]) -> f64 {
    op.grid().l2_norm(v)
}

pub fn norm(cfg: &RunConfig) -> Result<Report, CliError> {
    let op = operator(cfg)?;
    let est = operator_norm_with(
        &op,
        &NormOptions {
            seed: cfg.seed,
            ..Default::default()
        },
    );
    let spr = spectral_radius(&op, cfg.seed)?;
    let s = summary(
        cfg,
        json!({
            "operator_norm": est.value,
            "power_iterations": est.iterations,
            "power_converged": est.converged,
            "spectral_radius": spr.value,
            "krylov_order": spr.krylov_order,
            "hilbert_schmidt_bound": hilbert_schmidt_bound(op.problem(), op.medium()),
        }),
    );
    write_json(&out_path(cfg, "summary.json"), &s)?;
    Ok(Report::ok(s))
}
