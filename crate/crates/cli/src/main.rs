//! `krylov`: batch runner for the CG identity checks. Each subcommand writes
//! a CSV (to `--out` or stdout), prints a one-line verdict on stderr and
//! exits 0 when every checked quantity is within its threshold, 1 on a
//! threshold breach or numerical failure, 2 on a usage or input error.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Parser)]
#[command(name = "krylov", version, about = "Conjugate gradient identity checks and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare CG, plane-minimization and BFGS iterates step by step.
    Equivalence(SystemArgs),
    /// Check the CG/Lanczos correspondence, determinant and β-product identities.
    Lanczos(SystemArgs),
    /// Dump the residual or conjugate polynomials of a CG run and check duality.
    Polys(PolysArgs),
    /// Two-term and k-term error ratios of CG against the convergence bounds.
    Rates(SystemArgs),
    /// 1D finite elements solved by Riesz-preconditioned CG.
    Fem(FemArgs),
}

#[derive(Args, Clone)]
pub struct OutputArgs {
    /// Relative residual tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Iteration cap (default 10·n).
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run independent pieces (mesh levels) concurrently; output is unchanged.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Args, Clone)]
pub struct SystemArgs {
    /// Comma-separated eigenvalues; the matrix is a seeded rotation of diag(spectrum).
    #[arg(long, conflicts_with = "matrix_file")]
    pub spectrum: Option<String>,
    /// Matrix file: the order on the first line, then the lower triangle row by row.
    #[arg(long)]
    pub matrix_file: Option<PathBuf>,
    /// Order of the random SPD matrix.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Condition number of the random SPD matrix.
    #[arg(long, default_value_t = 10.0)]
    pub cond: f64,
    /// Seed for the matrix rotation and the right-hand side.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Copy, Clone, ValueEnum)]
pub enum PolyKind {
    Residual,
    Conjugate,
}

#[derive(Args, Clone)]
pub struct PolysArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Which family to dump.
    #[arg(long, value_enum, default_value_t = PolyKind::Residual)]
    pub kind: PolyKind,
}

#[derive(Args, Clone)]
pub struct FemArgs {
    /// Number of interior mesh nodes.
    #[arg(long, default_value_t = 15)]
    pub n: usize,
    /// Reaction coefficient in −u'' + c·u = f.
    #[arg(long, default_value_t = 0.0)]
    pub c: f64,
    /// Load: const1 (f ≡ 1) or sin-benchmark (exact solution sin πx).
    #[arg(long, default_value = "sin-benchmark")]
    pub load: String,
    /// Run a refinement study over this many dyadic mesh levels.
    #[arg(long, conflicts_with = "compare_operator")]
    pub refine: Option<usize>,
    /// Compare the PCG trace with the operator-form CG trace.
    #[arg(long)]
    pub compare_operator: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] krylov_core::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use krylov_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Read { .. } | CliError::Write { .. } => 2,
            CliError::Core(
                E::InvalidInput(_) | E::DimensionMismatch { .. } | E::Parse { .. } | E::NotPositiveDefinite { .. } | E::EmptyStart,
            ) => 2,
            CliError::Core(_) => 1,
        }
    }
}

/// Outcome of a subcommand that ran to completion.
pub struct Verdict {
    pub pass: bool,
    pub summary: String,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KRYLOV_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Equivalence(a) => commands::equivalence(a),
        Command::Lanczos(a) => commands::lanczos(a),
        Command::Polys(a) => commands::polys(a),
        Command::Rates(a) => commands::rates(a),
        Command::Fem(a) => commands::fem(a),
    };
    match result {
        Ok(v) => {
            eprintln!("{} {}", if v.pass { "PASS" } else { "FAIL" }, v.summary);
            ExitCode::from(if v.pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
