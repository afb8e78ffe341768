mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{parse_sweep, RunArgs, RunConfig};

#[derive(Parser)]
#[command(name = "lsborn", version, about = "1D Lippmann–Schwinger solver, Born series and spectral preconditioner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue locus and discrete spectrum of a constant medium
    Spectrum(RunArgs),
    /// Born series with convergence diagnostics
    Born(RunArgs),
    /// Preconditioned series and transformed spectrum
    Precond(RunArgs),
    /// Direct solve, optionally checked against finite differences
    Solve(RunArgs),
    /// Operator norm, spectral radius and Hilbert–Schmidt bound
    Norm(RunArgs),
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Library(lsborn::Error),
    Io(std::io::Error),
}

impl From<lsborn::Error> for CliError {
    fn from(e: lsborn::Error) -> Self {
        CliError::Library(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Library(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "I/O error: {e}"),
        }
    }
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_ASSERTION: u8 = 4;

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Library(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Library(lsborn::Error::Io(_)) | CliError::Io(_) => 1,
            _ => EXIT_VALIDATION,
        }
    }
}

fn run_one(name: &str, args: RunArgs) -> u8 {
    let result = RunConfig::resolve(name, args).and_then(|cfg| match name {
        "spectrum" => commands::spectrum(&cfg),
        "born" => commands::born(&cfg),
        "precond" => commands::precond(&cfg),
        "solve" => commands::solve(&cfg),
        "norm" => commands::norm(&cfg),
        _ => unreachable!("unknown subcommand {name}"),
    });
    match result {
        Ok(report) => {
            // A closed stdout must not turn a finished run into a failure.
            let _ = writeln!(
                std::io::stdout().lock(),
                "{}",
                serde_json::to_string_pretty(&report.summary).expect("summary serializes")
            );
            match report.assertion_failure {
                Some(msg) => {
                    eprintln!("lsborn {name}: check failed: {msg}");
                    EXIT_ASSERTION
                }
                None => 0,
            }
        }
        Err(e) => {
            eprintln!("lsborn {name}: {e}");
            e.exit_code()
        }
    }
}

fn run(name: &str, args: RunArgs) -> u8 {
    let args = match args.with_config_file() {
        Ok(a) => a,
        Err(e) => {
            eprintln!("lsborn {name}: {e}");
            return e.exit_code();
        }
    };
    let Some(spec) = args.sweep.clone() else {
        return run_one(name, args);
    };
    let values = match parse_sweep(&spec) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("lsborn {name}: {e}");
            return e.exit_code();
        }
    };
    if args.medium.is_some() {
        eprintln!("lsborn {name}: --sweep varies q0 and cannot be combined with --medium");
        return EXIT_VALIDATION;
    }
    let base = args.out_dir.clone().unwrap_or_else(|| "out".into());
    let mut worst = 0;
    let mut runs = Vec::new();
    for (i, q0) in values.into_iter().enumerate() {
        let dir = base.join(format!("q0_{i:03}"));
        let code = run_one(
            name,
            RunArgs {
                q0: Some(q0),
                out_dir: Some(dir.clone()),
                sweep: None,
                ..args.clone()
            },
        );
        worst = worst.max(code);
        runs.push(json!({ "q0": q0, "out_dir": dir, "exit_code": code }));
    }
    let index = json!({ "command": name, "sweep": spec, "runs": runs });
    let written = std::fs::create_dir_all(&base).and_then(|_| {
        std::fs::write(base.join("sweep.json"), serde_json::to_string_pretty(&index).expect("index serializes") + "\n")
    });
    if let Err(e) = written {
        eprintln!("lsborn {name}: cannot write sweep index: {e}");
        return worst.max(1);
    }
    worst
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Spectrum(a) => run("spectrum", a),
        Command::Born(a) => run("born", a),
        Command::Precond(a) => run("precond", a),
        Command::Solve(a) => run("solve", a),
        Command::Norm(a) => run("norm", a),
    };
    ExitCode::from(code)
}
