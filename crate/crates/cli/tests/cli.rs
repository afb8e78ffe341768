use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn lsborn(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsborn"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn ok(o: &Output) {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn spectrum_low_frequency() {
    let dir = TempDir::new().unwrap();
    ok(&lsborn(&["spectrum", "--k0", "1", "--L", "1", "--q0", "5", "--n", "400"], dir.path()));
    let s = json(dir.path().join("summary.json"));
    let r = &s["results"];
    assert!((r["T"].as_f64().unwrap() - 0.9320).abs() < 5e-4);
    assert!(r["max_locus_distance"].as_f64().unwrap() < 0.02);
    assert!(r["min_im_lambda"].as_f64().unwrap() > 0.0);
    assert!((r["spr_estimate"].as_f64().unwrap() - 2.4183).abs() < 0.01);
    assert_eq!(s["config"]["q0"], 5.0);
    assert_eq!(s["config"]["rule"], "midpoint");
    let locus = fs::read_to_string(dir.path().join("locus.csv")).unwrap();
    assert!(locus.starts_with("re,im,branch,t\n"));
    let spectrum = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(spectrum.starts_with("re,im\n"));
    assert_eq!(spectrum.lines().count(), 401);
}

#[test]
fn spectrum_high_frequency_threshold() {
    let dir = TempDir::new().unwrap();
    ok(&lsborn(&["spectrum", "--k0", "50", "--L", "1", "--q0", "1", "--n", "512"], dir.path()));
    let s = json(dir.path().join("summary.json"));
    assert!((s["results"]["T"].as_f64().unwrap() - 0.0677).abs() < 5e-4);
}

#[test]
fn spectrum_rejects_zero_contrast() {
    let dir = TempDir::new().unwrap();
    let o = lsborn(&["spectrum", "--q0", "0", "--n", "32"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("q0"));
}

#[test]
fn born_verdicts() {
    let dir = TempDir::new().unwrap();
    ok(&lsborn(&["born", "--k0", "1", "--q0", "1", "--n", "256"], dir.path()));
    let r = json(dir.path().join("summary.json"))["results"].clone();
    assert_eq!(r["verdict"], "converged");
    assert!(r["final_err_vs_direct"].as_f64().unwrap() < 1e-6);
    assert!(r["spr0"].as_f64().unwrap() < 1.0);
    assert!(r["C"].as_f64().unwrap().is_finite());
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("n,monitor,residual,err_vs_ref\n0,"));

    ok(&lsborn(&["born", "--k0", "50", "--q0", "1", "--n", "512"], dir.path()));
    let r = json(dir.path().join("summary.json"))["results"].clone();
    assert_eq!(r["verdict"], "diverged");
    assert!(r["spr0"].as_f64().unwrap() > 1.0);

    ok(&lsborn(&["born", "--q0", "0", "--n", "64"], dir.path()));
    let r = json(dir.path().join("summary.json"))["results"].clone();
    assert_eq!(r["verdict"], "converged");
    assert_eq!(r["iterations"], 1);
}

#[test]
fn precond_case_a_converges() {
    let dir = TempDir::new().unwrap();
    let args = ["precond", "--k0", "1", "--q0", "5", "--eps-prime", "5.2", "--eps", "0.02", "--n", "128"];
    ok(&lsborn(&args, dir.path()));
    let s = json(dir.path().join("params.json"));
    let r = &s["results"];
    assert_eq!(r["all_inside"], true);
    assert!((r["params"]["alpha"].as_f64().unwrap() - 1.3803).abs() < 1e-4);
    assert_eq!(r["solve"]["verdict"], "converged");
    assert!(r["solve"]["final_err_vs_direct"].as_f64().unwrap() < 1e-6);
    let mu = fs::read_to_string(dir.path().join("mu.csv")).unwrap();
    assert!(mu.starts_with("re_mu,im_mu\n"));
    assert!(dir.path().join("trace.csv").exists());
}

#[test]
fn precond_case_b_converges() {
    let dir = TempDir::new().unwrap();
    let args = [
        "precond", "--k0", "50", "--q0", "1", "--eps-prime", "50", "--eps", "3e-5", "--n", "64", "--max-iter",
        "100000000", "--record-every", "1000000",
    ];
    ok(&lsborn(&args, dir.path()));
    let r = json(dir.path().join("params.json"))["results"].clone();
    assert_eq!(r["all_inside"], true);
    assert_eq!(r["solve"]["verdict"], "converged");
    assert!(r["solve"]["final_err_vs_direct"].as_f64().unwrap() < 1e-6);
}

#[test]
fn precond_beyond_bound_fails_assertion() {
    let dir = TempDir::new().unwrap();
    ok(&lsborn(&["precond", "--k0", "1", "--q0", "1", "--n", "64"], dir.path()));
    let eps_max = json(dir.path().join("params.json"))["results"]["params"]["eps_max"].as_f64().unwrap();
    let eps = (10.0 * eps_max).to_string();
    let o = lsborn(&["precond", "--k0", "1", "--q0", "1", "--n", "64", "--eps", &eps], dir.path());
    assert_eq!(code(&o), 4);
    let r = json(dir.path().join("params.json"))["results"].clone();
    assert_eq!(r["all_inside"], false);
    assert_eq!(r["admissible"], false);
    assert!(r["max_abs_mu"].as_f64().unwrap() >= 1.0);
    assert!(r["solve"].is_null());
}

#[test]
fn precond_numeric_mode_needs_constant_medium() {
    let dir = TempDir::new().unwrap();
    ok(&lsborn(&["precond", "--k0", "1", "--q0", "5", "--n", "64", "--numeric-xi"], dir.path()));
    let p = json(dir.path().join("params.json"))["results"]["params"].clone();
    assert_eq!(p["mode"], "numeric");
    assert!(p["xi_plus"].is_number());

    let medium = dir.path().join("q.csv");
    fs::write(&medium, "x,q\n0.25,1\n0.75,2\n").unwrap();
    let o = lsborn(&["precond", "--medium", medium.to_str().unwrap(), "--numeric-xi"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn solve_zero_contrast_gives_zero_field() {
    let dir = TempDir::new().unwrap();
    ok(&lsborn(&["solve", "--q0", "0", "--n", "16"], dir.path()));
    let u = fs::read_to_string(dir.path().join("u.csv")).unwrap();
    let mut lines = u.lines();
    assert_eq!(lines.next(), Some("x,re,im"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r.ends_with(",0,0")));
}

#[test]
fn solve_agrees_with_finite_differences() {
    let dir = TempDir::new().unwrap();
    ok(&lsborn(&["solve", "--k0", "1", "--L", "1", "--q0", "1", "--oracle"], dir.path()));
    let o = json(dir.path().join("oracle.json"));
    assert!(o["results"]["rel_l2_err"].as_f64().unwrap() < 1e-3);
}

#[test]
fn solve_high_frequency_without_series() {
    let dir = TempDir::new().unwrap();
    ok(&lsborn(&["solve", "--k0", "50", "--q0", "1", "--n", "1024"], dir.path()));
    assert!(json(dir.path().join("summary.json"))["results"]["u_norm"].as_f64().unwrap() > 0.0);
}

#[test]
fn solve_with_tabulated_medium() {
    let dir = TempDir::new().unwrap();
    let medium = dir.path().join("q.csv");
    fs::write(&medium, "x,q\n0.125,0.5\n0.375,1\n0.625,1\n0.875,0.5\n").unwrap();
    ok(&lsborn(&["solve", "--medium", medium.to_str().unwrap()], dir.path()));
    let s = json(dir.path().join("summary.json"));
    assert_eq!(s["config"]["n"], 4);

    fs::write(&medium, "x,q\n0.1,0.5\n0.375,-3\n").unwrap();
    assert_eq!(code(&lsborn(&["solve", "--medium", medium.to_str().unwrap()], dir.path())), 2);
}

#[test]
fn norm_reports_bound() {
    let dir = TempDir::new().unwrap();
    ok(&lsborn(&["norm", "--k0", "1", "--q0", "5", "--n", "512"], dir.path()));
    let r = json(dir.path().join("summary.json"))["results"].clone();
    let norm = r["operator_norm"].as_f64().unwrap();
    let spr = r["spectral_radius"].as_f64().unwrap();
    assert!((r["hilbert_schmidt_bound"].as_f64().unwrap() - 2.5).abs() < 1e-12);
    assert!(spr <= norm && norm <= 2.5);
    assert!((spr - 2.4183).abs() < 1e-3);
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let args = ["born", "--k0", "2", "--q0", "0.5", "--n", "128", "--seed", "9"];
    ok(&lsborn(&args, dir.path()));
    let first = (
        fs::read(dir.path().join("summary.json")).unwrap(),
        fs::read(dir.path().join("trace.csv")).unwrap(),
    );
    ok(&lsborn(&args, dir.path()));
    assert_eq!(fs::read(dir.path().join("summary.json")).unwrap(), first.0);
    assert_eq!(fs::read(dir.path().join("trace.csv")).unwrap(), first.1);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"k0": 2.0, "L": 1.5, "q0": 0.3, "n": 96, "tol": 1e-10, "max-iter": 500}"#).unwrap();
    ok(&lsborn(&["born", "--config", cfg.to_str().unwrap(), "--n", "64"], dir.path()));
    let c = json(dir.path().join("summary.json"))["config"].clone();
    assert_eq!(c["k0"], 2.0);
    assert_eq!(c["L"], 1.5);
    assert_eq!(c["n"], 64);
    assert_eq!(c["tol"], 1e-10);
    assert_eq!(c["max_iter"], 500);

    fs::write(&cfg, r#"{"q0": 1.0, "bogus": 1}"#).unwrap();
    assert_eq!(code(&lsborn(&["born", "--config", cfg.to_str().unwrap()], dir.path())), 2);
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let dir = TempDir::new().unwrap();
    ok(&lsborn(&["born", "--n", "64", "--sweep", "q0=0.5:1:3"], dir.path()));
    let index = json(dir.path().join("sweep.json"));
    let runs = index["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 3);
    assert_eq!(runs[1]["q0"], 0.75);
    for (i, run) in runs.iter().enumerate() {
        let s = json(dir.path().join(format!("q0_{i:03}/summary.json")));
        assert_eq!(s["config"]["q0"], run["q0"]);
    }
}

#[test]
fn invalid_input_exits_with_validation_code() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&lsborn(&["born", "--q0", "1", "--k0", "-1"], dir.path())), 2);
    assert_eq!(code(&lsborn(&["born", "--q0", "1", "--tol", "0"], dir.path())), 2);
    assert_eq!(code(&lsborn(&["born"], dir.path())), 2);
    assert_eq!(code(&lsborn(&["born", "--q0", "1", "--no-such-flag"], dir.path())), 2);
    assert_eq!(code(&lsborn(&["born", "--q0", "-2", "--n", "8"], dir.path())), 2);
}
