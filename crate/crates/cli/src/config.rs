use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use acr::hodlr::DEFAULT_LEAF_SIZE;
use acr::problems::{CoefficientField, ModelProblem};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "acr",
    version,
    about = "Block cyclic reduction with hierarchical low-rank blocks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one model problem and write a report.
    Solve(SolveArgs),
    /// Solve with ACR, dense block cyclic reduction and dense LU, and compare.
    Verify(VerifyArgs),
    /// Repeat a solve over a list of values of one parameter.
    Sweep(SweepArgs),
    /// Write the assembled matrix and right-hand side to a directory.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemKind {
    Poisson,
    Helmholtz,
    Convdiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    N,
    Eps,
    K,
    Alpha,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[arg(long, value_enum)]
    pub problem: ProblemKind,
    /// Interior grid points per dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// Poisson coefficient: const:X, checkerboard[:CONTRAST] or file:PATH.
    #[arg(long)]
    pub kappa: Option<KappaSpec>,
    /// Helmholtz wavenumber.
    #[arg(long)]
    pub k: Option<f64>,
    /// Convection strength.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
    #[arg(long = "leaf-size", default_value_t = DEFAULT_LEAF_SIZE)]
    pub leaf_size: usize,
    /// Stop reducing once at most this many blocks remain.
    #[arg(long, default_value_t = 1)]
    pub cutoff: usize,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Relative residual above which the run counts as failed.
    #[arg(long = "max-residual", default_value_t = 1e-6)]
    pub max_residual: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Report file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Largest accepted pairwise relative difference between solutions.
    #[arg(long = "diff-tol", default_value_t = 1e-6)]
    pub diff_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Comma-separated, sorted list of values for the swept parameter.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Existing directory receiving A.mtx and rhs.txt.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Textual description of the Poisson coefficient.
#[derive(Debug, Clone, PartialEq)]
pub enum KappaSpec {
    Const(f64),
    Checkerboard(f64),
    File(PathBuf),
}

impl FromStr for KappaSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let number = |t: &str| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v > 0.0)
                .ok_or_else(|| format!("expected a positive number, got '{t}'"))
        };
        match (kind, rest) {
            ("const", Some(v)) => number(v).map(KappaSpec::Const),
            ("checkerboard", None) => Ok(KappaSpec::Checkerboard(1e3)),
            ("checkerboard", Some(v)) => number(v).map(KappaSpec::Checkerboard),
            ("file", Some(p)) if !p.is_empty() => Ok(KappaSpec::File(PathBuf::from(p))),
            _ => Err(format!(
                "unknown kappa '{s}'; use const:X, checkerboard[:CONTRAST] or file:PATH"
            )),
        }
    }
}

impl fmt::Display for KappaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KappaSpec::Const(v) => write!(f, "const:{v}"),
            KappaSpec::Checkerboard(c) => write!(f, "checkerboard:{c}"),
            KappaSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl KappaSpec {
    pub fn field(&self) -> acr::Result<CoefficientField> {
        Ok(match self {
            KappaSpec::Const(v) => CoefficientField::Constant(*v),
            KappaSpec::Checkerboard(contrast) => CoefficientField::Checkerboard {
                cells: 4,
                contrast: *contrast,
            },
            KappaSpec::File(path) => CoefficientField::from_table_file(path)?,
        })
    }
}

/// The problem-specific parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum Param {
    Kappa(KappaSpec),
    K(f64),
    Alpha(f64),
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Kappa(spec) => write!(f, "kappa={spec}"),
            Param::K(k) => write!(f, "k={k}"),
            Param::Alpha(a) => write!(f, "alpha={a}"),
        }
    }
}

/// A fully validated problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    pub n: usize,
    pub param: Param,
}

impl ProblemConfig {
    pub fn name(&self) -> &'static str {
        match self.kind {
            ProblemKind::Poisson => "poisson",
            ProblemKind::Helmholtz => "helmholtz",
            ProblemKind::Convdiff => "convdiff",
        }
    }

    pub fn model(&self) -> acr::Result<ModelProblem> {
        Ok(match &self.param {
            Param::Kappa(spec) => ModelProblem::Poisson(spec.field()?),
            Param::K(k) => ModelProblem::Helmholtz { k: *k },
            Param::Alpha(alpha) => ModelProblem::ConvDiff { alpha: *alpha },
        })
    }
}

/// Validated solver settings shared by solve, verify and sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub eps: f64,
    pub leaf_size: usize,
    pub cutoff_blocks: usize,
    pub threads: Option<usize>,
    pub max_residual: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
}

fn check_n(n: usize) -> CliResult<usize> {
    if n < 2 {
        return Err(CliError::config(format!("--n must be at least 2, got {n}")));
    }
    Ok(n)
}

fn check_finite(name: &str, v: f64) -> CliResult<f64> {
    if !v.is_finite() {
        return Err(CliError::config(format!(
            "--{name} must be finite, got {v}"
        )));
    }
    Ok(v)
}

fn check_alpha(v: f64) -> CliResult<f64> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(CliError::config(format!(
            "--alpha must be finite and non-negative, got {v}"
        )));
    }
    Ok(v)
}

fn check_eps(v: f64) -> CliResult<f64> {
    if !(v.is_finite() && v > 0.0) {
        return Err(CliError::config(format!("--eps must be positive, got {v}")));
    }
    Ok(v)
}

fn reject(present: bool, flag: &str, kind: ProblemKind) -> CliResult<()> {
    if present {
        let name = format!("{kind:?}").to_lowercase();
        return Err(CliError::config(format!(
            "--{flag} does not apply to --problem {name}"
        )));
    }
    Ok(())
}

fn conflict(present: bool, flag: &str) -> CliResult<()> {
    if present {
        return Err(CliError::config(format!(
            "--{flag} cannot be combined with --axis {flag}"
        )));
    }
    Ok(())
}

fn missing(flag: &str, kind: ProblemKind) -> CliError {
    let name = format!("{kind:?}").to_lowercase();
    CliError::config(format!("--problem {name} requires --{flag}"))
}

/// Validates the problem flags. When `axis` is given, the swept parameter
/// must be absent and is filled with a placeholder until the sweep sets it.
pub fn resolve_problem(args: &ProblemArgs, axis: Option<Axis>) -> CliResult<ProblemConfig> {
    let kind = args.problem;
    let sweeping = |a: Axis| axis == Some(a);
    let param = match kind {
        ProblemKind::Poisson => {
            reject(args.k.is_some() || sweeping(Axis::K), "k", kind)?;
            reject(args.alpha.is_some() || sweeping(Axis::Alpha), "alpha", kind)?;
            Param::Kappa(args.kappa.clone().unwrap_or(KappaSpec::Const(1.0)))
        }
        ProblemKind::Helmholtz => {
            reject(args.kappa.is_some(), "kappa", kind)?;
            reject(args.alpha.is_some() || sweeping(Axis::Alpha), "alpha", kind)?;
            if sweeping(Axis::K) {
                conflict(args.k.is_some(), "k")?;
                Param::K(0.0)
            } else {
                Param::K(check_finite(
                    "k",
                    args.k.ok_or_else(|| missing("k", kind))?,
                )?)
            }
        }
        ProblemKind::Convdiff => {
            reject(args.kappa.is_some(), "kappa", kind)?;
            reject(args.k.is_some() || sweeping(Axis::K), "k", kind)?;
            if sweeping(Axis::Alpha) {
                conflict(args.alpha.is_some(), "alpha")?;
                Param::Alpha(0.0)
            } else {
                Param::Alpha(check_alpha(
                    args.alpha.ok_or_else(|| missing("alpha", kind))?,
                )?)
            }
        }
    };
    let n = if sweeping(Axis::N) {
        conflict(args.n.is_some(), "n")?;
        2
    } else {
        check_n(args.n.ok_or_else(|| CliError::config("--n is required"))?)?
    };
    Ok(ProblemConfig { kind, n, param })
}

pub fn resolve_run(
    problem: &ProblemArgs,
    solver: &SolverArgs,
    output: &OutputArgs,
    axis: Option<Axis>,
    default_format: Format,
) -> CliResult<RunConfig> {
    let problem = resolve_problem(problem, axis)?;
    let eps = if axis == Some(Axis::Eps) {
        1.0
    } else {
        check_eps(solver.eps)?
    };
    if solver.leaf_size == 0 {
        return Err(CliError::config("--leaf-size must be at least 1"));
    }
    if solver.cutoff == 0 {
        return Err(CliError::config("--cutoff must be at least 1"));
    }
    if solver.threads == Some(0) {
        return Err(CliError::config("--threads must be at least 1"));
    }
    if !(solver.max_residual.is_finite() && solver.max_residual > 0.0) {
        return Err(CliError::config("--max-residual must be positive"));
    }
    Ok(RunConfig {
        problem,
        eps,
        leaf_size: solver.leaf_size,
        cutoff_blocks: solver.cutoff,
        threads: solver.threads,
        max_residual: solver.max_residual,
        format: output.format.unwrap_or(default_format),
        out: output.out.clone(),
    })
}

/// One configuration per swept value.
pub fn sweep_configs(base: &RunConfig, axis: Axis, values: &[f64]) -> CliResult<Vec<RunConfig>> {
    if values.is_empty() {
        return Err(CliError::config("--values must not be empty"));
    }
    let ascending = values.windows(2).all(|w| w[0] < w[1]);
    let descending = values.windows(2).all(|w| w[0] > w[1]);
    if !(ascending || descending) {
        return Err(CliError::config("--values must be sorted without repeats"));
    }
    values
        .iter()
        .map(|&v| {
            let mut cfg = base.clone();
            match axis {
                Axis::N => {
                    if v.fract() != 0.0 || v < 0.0 {
                        return Err(CliError::config(format!("grid size {v} is not an integer")));
                    }
                    cfg.problem.n = check_n(v as usize)?;
                }
                Axis::Eps => cfg.eps = check_eps(v)?,
                Axis::K => cfg.problem.param = Param::K(check_finite("k", v)?),
                Axis::Alpha => cfg.problem.param = Param::Alpha(check_alpha(v)?),
            }
            Ok(cfg)
        })
        .collect()
}
