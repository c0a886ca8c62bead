use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use acr::oracles::{dense_lu_solve_system, relative_difference};
use acr::problems::{BlockTridiagSystem, Grid2D};
use acr::solver::{acr_solve, dense_bcr_solve, AcrOptions};
use serde::Serialize;

use crate::config::{
    resolve_problem, resolve_run, sweep_configs, Axis, Command, ExportArgs, Format, RunConfig,
    SolveArgs, SweepArgs, VerifyArgs,
};
use crate::error::{CliError, CliResult};
use crate::report::{fitted_exponent, write_csv, RunReport};

/// Largest grid the dense oracles in `verify` accept.
pub const VERIFY_MAX_N: usize = 128;

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Solve(args) => solve(&args),
        Command::Verify(args) => verify(&args),
        Command::Sweep(args) => sweep(&args),
        Command::Export(args) => export(&args),
    }
}

fn build_system(cfg: &RunConfig) -> CliResult<BlockTridiagSystem> {
    let grid = Grid2D::new(cfg.problem.n)?;
    Ok(cfg.problem.model()?.build(&grid)?)
}

fn options(cfg: &RunConfig) -> CliResult<AcrOptions> {
    Ok(AcrOptions::new(cfg.eps)?
        .leaf_size(cfg.leaf_size)
        .cutoff_blocks(cfg.cutoff_blocks))
}

/// Runs `f` on a pool sized by `--threads`.
fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::config(format!("cannot start thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn solve_one(cfg: &RunConfig) -> CliResult<RunReport> {
    let sys = build_system(cfg)?;
    let (_, report) = acr_solve(&sys, &options(cfg)?)?;
    Ok(RunReport::new(cfg, &report))
}

fn destination(out: &Option<PathBuf>) -> String {
    out.as_ref()
        .map_or_else(|| "<stdout>".to_string(), |p| p.display().to_string())
}

/// Hands a writer for `--out` (or stdout) to `f` and flushes it.
fn emit(
    out: &Option<PathBuf>,
    f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> CliResult<()> {
    let io_err = |source| CliError::Io {
        path: destination(out),
        source,
    };
    match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::io(path, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w).and_then(|_| w.flush()).map_err(io_err)?;
            println!("wrote {}", path.display());
        }
        None => {
            let mut w = std::io::stdout().lock();
            f(&mut w).and_then(|_| w.flush()).map_err(io_err)?;
        }
    }
    Ok(())
}

fn json<T: Serialize>(w: &mut dyn Write, value: &T) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)
}

fn residual_check(reports: &[RunReport]) -> CliResult<()> {
    match reports.iter().find(|r| !r.passed) {
        Some(r) => Err(CliError::Rejected(format!(
            "residual {:.3e} exceeds {:.1e} for {} n={} eps={:e} {}",
            r.residual, r.max_residual, r.problem, r.n, r.eps, r.param
        ))),
        None => Ok(()),
    }
}

fn solve(args: &SolveArgs) -> CliResult<()> {
    let cfg = resolve_run(
        &args.problem,
        &args.solver,
        &args.output,
        None,
        Format::Json,
    )?;
    let report = in_pool(cfg.threads, || solve_one(&cfg))??;
    emit(&cfg.out, |w| match cfg.format {
        Format::Json => json(w, &report),
        Format::Csv => write_csv(w, std::slice::from_ref(&report)).map(|_| ()),
    })?;
    residual_check(std::slice::from_ref(&report))
}

#[derive(Debug, Serialize)]
struct Difference {
    first: &'static str,
    second: &'static str,
    relative_difference: f64,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    acr: RunReport,
    differences: Vec<Difference>,
    diff_tol: f64,
    passed: bool,
}

fn verify(args: &VerifyArgs) -> CliResult<()> {
    let cfg = resolve_run(
        &args.problem,
        &args.solver,
        &args.output,
        None,
        Format::Json,
    )?;
    if cfg.problem.n > VERIFY_MAX_N {
        return Err(CliError::config(format!(
            "verify builds dense oracles and is limited to --n {VERIFY_MAX_N}"
        )));
    }
    if !(args.diff_tol.is_finite() && args.diff_tol > 0.0) {
        return Err(CliError::config("--diff-tol must be positive"));
    }
    let report = in_pool(cfg.threads, || -> CliResult<VerifyReport> {
        let sys = build_system(&cfg)?;
        let (u_acr, rep) = acr_solve(&sys, &options(&cfg)?)?;
        let u_bcr = dense_bcr_solve(&sys)?;
        let u_lu = dense_lu_solve_system(&sys)?;
        let u_lu = u_lu.as_slice();
        let differences = vec![
            Difference {
                first: "acr",
                second: "lu",
                relative_difference: relative_difference(&u_acr, u_lu),
            },
            Difference {
                first: "bcr",
                second: "lu",
                relative_difference: relative_difference(&u_bcr, u_lu),
            },
            Difference {
                first: "acr",
                second: "bcr",
                relative_difference: relative_difference(&u_acr, &u_bcr),
            },
        ];
        let acr = RunReport::new(&cfg, &rep);
        let passed = acr.passed
            && differences
                .iter()
                .all(|d| d.relative_difference <= args.diff_tol);
        Ok(VerifyReport {
            acr,
            differences,
            diff_tol: args.diff_tol,
            passed,
        })
    })??;
    emit(&cfg.out, |w| match cfg.format {
        Format::Json => json(w, &report),
        Format::Csv => {
            writeln!(w, "first,second,relative_difference")?;
            for d in &report.differences {
                writeln!(w, "{},{},{:e}", d.first, d.second, d.relative_difference)?;
            }
            Ok(())
        }
    })?;
    residual_check(std::slice::from_ref(&report.acr))?;
    match report
        .differences
        .iter()
        .find(|d| d.relative_difference > args.diff_tol)
    {
        Some(d) => Err(CliError::Rejected(format!(
            "{} and {} differ by {:.3e} (tolerance {:.1e})",
            d.first, d.second, d.relative_difference, args.diff_tol
        ))),
        None => Ok(()),
    }
}

/// Growth exponents `p` in `t, m ≈ c·N^p` over an n-sweep.
#[derive(Debug, Serialize)]
struct GrowthFit {
    time_exponent: Option<f64>,
    memory_exponent: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SweepReport {
    axis: String,
    rows: Vec<RunReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<GrowthFit>,
}

fn sweep(args: &SweepArgs) -> CliResult<()> {
    let base = resolve_run(
        &args.problem,
        &args.solver,
        &args.output,
        Some(args.axis),
        Format::Csv,
    )?;
    let configs = sweep_configs(&base, args.axis, &args.values)?;
    let rows = in_pool(base.threads, || {
        configs.iter().map(solve_one).collect::<CliResult<Vec<_>>>()
    })??;
    let fit = (args.axis == Axis::N).then(|| {
        let unknowns: Vec<f64> = rows.iter().map(|r| r.unknowns as f64).collect();
        let time: Vec<f64> = rows.iter().map(RunReport::total_ms).collect();
        let memory: Vec<f64> = rows.iter().map(|r| r.storage_bytes as f64).collect();
        GrowthFit {
            time_exponent: fitted_exponent(&unknowns, &time),
            memory_exponent: fitted_exponent(&unknowns, &memory),
        }
    });
    let report = SweepReport {
        axis: format!("{:?}", args.axis).to_lowercase(),
        rows,
        fit,
    };
    emit(&base.out, |w| match base.format {
        Format::Json => json(w, &report),
        Format::Csv => {
            let w = write_csv(w, &report.rows)?;
            // trailing comment lines keep the table itself machine-readable
            if let Some(fit) = &report.fit {
                for (name, p) in [
                    ("time_exponent", fit.time_exponent),
                    ("memory_exponent", fit.memory_exponent),
                ] {
                    match p {
                        Some(p) => writeln!(w, "# {name}={p:.4}")?,
                        None => writeln!(w, "# {name}=undefined")?,
                    }
                }
            }
            Ok(())
        }
    })?;
    residual_check(&report.rows)
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

fn export(args: &ExportArgs) -> CliResult<()> {
    let problem = resolve_problem(&args.problem, None)?;
    if !args.out.is_dir() {
        return Err(CliError::io(
            &args.out,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "output directory does not exist",
            ),
        ));
    }
    let sys = problem.model()?.build(&Grid2D::new(problem.n)?)?;
    let matrix = args.out.join("A.mtx");
    let rhs = args.out.join("rhs.txt");
    write_file(&matrix, |w| {
        acr::mm::write_matrix_market(w, &sys.assemble_full())
    })?;
    write_file(&rhs, |w| acr::mm::write_vector(w, sys.rhs()))?;
    println!("wrote {} and {}", matrix.display(), rhs.display());
    Ok(())
}
