use std::fs::File;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use lsborn::problem::{default_resolution, Incidence, Medium, QuadratureRule, WaveProblem};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IncidenceArg {
    Left,
    Right,
}

impl From<IncidenceArg> for Incidence {
    fn from(a: IncidenceArg) -> Self {
        match a {
            IncidenceArg::Left => Incidence::Left,
            IncidenceArg::Right => Incidence::Right,
        }
    }
}

/// Flags shared by every subcommand. Unset flags fall back to `--config`,
/// then to the built-in defaults.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunArgs {
    /// Wavenumber k0 [default: 1]
    #[arg(long)]
    pub k0: Option<f64>,
    /// Domain length [default: 1]
    #[arg(long = "L", visible_alias = "length")]
    #[serde(rename = "L", alias = "length")]
    pub length: Option<f64>,
    /// Constant contrast q0
    #[arg(long, allow_hyphen_values = true, conflicts_with = "medium")]
    pub q0: Option<f64>,
    /// Tabulated contrast, CSV with header `x,q` sampled at the grid nodes
    #[arg(long)]
    pub medium: Option<PathBuf>,
    /// Quadrature nodes [default: 256 per wavelength of k0·L, at least 256]
    #[arg(long)]
    pub n: Option<usize>,
    /// Quadrature rule [default: midpoint]
    #[arg(long)]
    pub rule: Option<QuadratureRule>,
    /// Incident wave direction [default: left]
    #[arg(long, value_enum)]
    pub incidence: Option<IncidenceArg>,
    /// Iteration budget [default: 10000]
    #[arg(long)]
    #[serde(alias = "max-iter")]
    pub max_iter: Option<usize>,
    /// Relative tolerance [default: 1e-8]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Store every k-th iterate in the trace [default: 1]
    #[arg(long)]
    #[serde(alias = "record-every")]
    pub record_every: Option<usize>,
    /// ε′ of the preconditioner [default: κq0 + 1]
    #[arg(long)]
    #[serde(alias = "eps-prime")]
    pub eps_prime: Option<f64>,
    /// ε of the preconditioner [default: 0.9·eps_max]
    #[arg(long)]
    pub eps: Option<f64>,
    /// Bound ε from the sampled locus instead of the closed form
    #[arg(long)]
    #[serde(alias = "numeric-xi")]
    pub numeric_xi: bool,
    /// Compare the direct solution with the finite-difference solver
    #[arg(long)]
    pub oracle: bool,
    /// Finite-difference grid size for --oracle [default: max(4n, 4096)]
    #[arg(long)]
    #[serde(alias = "fd-points")]
    pub fd_points: Option<usize>,
    /// Output directory [default: out]
    #[arg(long)]
    #[serde(alias = "out-dir")]
    pub out_dir: Option<PathBuf>,
    /// Seed for randomized start vectors [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON file with any of the above keys
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Repeat the run over q0 values, `q0=a:b:steps`
    #[arg(long)]
    #[serde(skip)]
    pub sweep: Option<String>,
}

impl RunArgs {
    /// Fills unset fields from `other`.
    fn or(self, other: RunArgs) -> RunArgs {
        RunArgs {
            k0: self.k0.or(other.k0),
            length: self.length.or(other.length),
            q0: self.q0.or(other.q0),
            medium: self.medium.or(other.medium),
            n: self.n.or(other.n),
            rule: self.rule.or(other.rule),
            incidence: self.incidence.or(other.incidence),
            max_iter: self.max_iter.or(other.max_iter),
            tol: self.tol.or(other.tol),
            record_every: self.record_every.or(other.record_every),
            eps_prime: self.eps_prime.or(other.eps_prime),
            eps: self.eps.or(other.eps),
            numeric_xi: self.numeric_xi || other.numeric_xi,
            oracle: self.oracle || other.oracle,
            fd_points: self.fd_points.or(other.fd_points),
            out_dir: self.out_dir.or(other.out_dir),
            seed: self.seed.or(other.seed),
            config: self.config,
            sweep: self.sweep,
        }
    }

    /// Merges the `--config` file, if any, under the command-line values.
    pub fn with_config_file(self) -> Result<RunArgs, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file = File::open(&path).map_err(|e| CliError::Validation(format!("cannot open {}: {e}", path.display())))?;
        let mut from_file: RunArgs = serde_json::from_reader(file)
            .map_err(|e| CliError::Validation(format!("invalid config {}: {e}", path.display())))?;
        if self.q0.is_some() {
            from_file.medium = None;
        }
        if self.medium.is_some() {
            from_file.q0 = None;
        }
        if from_file.q0.is_some() && from_file.medium.is_some() {
            return Err(CliError::Validation("config sets both q0 and medium".into()));
        }
        // Relative medium paths in a config file are relative to the file.
        if let (Some(m), Some(dir)) = (from_file.medium.as_mut(), path.parent()) {
            if m.is_relative() {
                *m = dir.join(&*m);
            }
        }
        Ok(self.or(from_file))
    }
}

/// Fully resolved run configuration, echoed in every summary.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub k0: f64,
    #[serde(rename = "L")]
    pub length: f64,
    pub q0: Option<f64>,
    pub medium: Option<PathBuf>,
    pub n: usize,
    pub rule: QuadratureRule,
    pub incidence: IncidenceArg,
    pub max_iter: usize,
    pub tol: f64,
    pub record_every: usize,
    pub eps_prime: Option<f64>,
    pub eps: Option<f64>,
    pub numeric_xi: bool,
    pub oracle: bool,
    pub fd_points: usize,
    pub out_dir: PathBuf,
    pub seed: u64,
    #[serde(skip)]
    pub medium_value: Medium,
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Validation(format!("--{name} must be positive and finite, got {v}")))
    }
}

fn read_medium(path: &Path, length: f64) -> Result<Medium, CliError> {
    let file = File::open(path).map_err(|e| CliError::Validation(format!("cannot open {}: {e}", path.display())))?;
    Medium::from_csv_reader(file, length).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn resolve(command: &str, args: RunArgs) -> Result<RunConfig, CliError> {
        let k0 = positive("k0", args.k0.unwrap_or(1.0))?;
        let length = positive("L", args.length.unwrap_or(1.0))?;
        let medium_value = match (&args.q0, &args.medium) {
            (Some(q0), None) => {
                if !q0.is_finite() {
                    return Err(CliError::Validation(format!("--q0 must be finite, got {q0}")));
                }
                Medium::constant(*q0)
            }
            (None, Some(path)) => read_medium(path, length)?,
            (None, None) => return Err(CliError::Validation("one of --q0 or --medium is required".into())),
            (Some(_), Some(_)) => return Err(CliError::Validation("--q0 and --medium are mutually exclusive".into())),
        };
        let n = match (args.n, &medium_value) {
            (Some(n), _) => n,
            (None, Medium::Tabulated { x, .. }) => x.len(),
            (None, _) => default_resolution(k0 * length),
        };
        if n < 2 {
            return Err(CliError::Validation(format!("--n must be at least 2, got {n}")));
        }
        let tol = args.tol.unwrap_or(1e-8);
        if !(tol > 0.0 && tol < 1.0) {
            return Err(CliError::Validation(format!("--tol must lie in (0, 1), got {tol}")));
        }
        let max_iter = args.max_iter.unwrap_or(10_000);
        let record_every = args.record_every.unwrap_or(1);
        if max_iter == 0 || record_every == 0 {
            return Err(CliError::Validation("--max-iter and --record-every must be at least 1".into()));
        }
        if let Some(e) = args.eps_prime {
            positive("eps-prime", e)?;
        }
        if let Some(e) = args.eps {
            positive("eps", e)?;
        }
        let fd_points = args.fd_points.unwrap_or((4 * n).max(4096));
        if fd_points < 3 {
            return Err(CliError::Validation(format!("--fd-points must be at least 3, got {fd_points}")));
        }
        Ok(RunConfig {
            command: command.to_string(),
            k0,
            length,
            q0: args.q0,
            medium: args.medium,
            n,
            rule: args.rule.unwrap_or_default(),
            incidence: args.incidence.unwrap_or(IncidenceArg::Left),
            max_iter,
            tol,
            record_every,
            eps_prime: args.eps_prime,
            eps: args.eps,
            numeric_xi: args.numeric_xi,
            oracle: args.oracle,
            fd_points,
            out_dir: args.out_dir.unwrap_or_else(|| PathBuf::from("out")),
            seed: args.seed.unwrap_or(0),
            medium_value,
        })
    }

    pub fn problem(&self) -> Result<WaveProblem, CliError> {
        Ok(WaveProblem::new(self.k0, self.length, self.incidence.into(), self.n)?)
    }

    pub fn kappa(&self) -> f64 {
        self.k0 * self.length
    }

    /// `q0` of a constant medium, or a validation error naming `what`.
    pub fn require_constant(&self, what: &str) -> Result<f64, CliError> {
        self.medium_value
            .constant_value()
            .ok_or_else(|| CliError::Validation(format!("{what} requires a constant medium (--q0)")))
    }
}

/// `q0=a:b:steps` into `steps` equally spaced values from `a` to `b`.
pub fn parse_sweep(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Validation(format!("--sweep expects q0=a:b:steps, got '{spec}'"));
    let range = spec.strip_prefix("q0=").ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').collect();
    let [a, b, steps] = parts.as_slice() else {
        return Err(bad());
    };
    let a: f64 = a.parse().map_err(|_| bad())?;
    let b: f64 = b.parse().map_err(|_| bad())?;
    let steps: usize = steps.parse().map_err(|_| bad())?;
    if steps == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if steps == 1 {
        return Ok(vec![a]);
    }
    Ok((0..steps).map(|i| a + (b - a) * i as f64 / (steps - 1) as f64).collect())
}
