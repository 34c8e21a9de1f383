use std::fs;
use std::io::Write;
use std::path::Path;

use krylov_core::linalg::io::{parse_matrix, parse_spectrum};
use krylov_core::linalg::{random_spd, random_vector, spd_from_spectrum};
use krylov_core::{SolveOptions, SpdMatrix};

use crate::{CliError, OutputArgs, SystemArgs};

/// The system `A·x = b` with `x₀ = 0` described by the common flags. The
/// matrix comes from `--matrix-file`, else `--spectrum`, else a random SPD
/// matrix of order `--n` and condition `--cond`; `b` is a seeded Gaussian
/// vector in every case.
pub struct System {
    pub a: SpdMatrix,
    pub b: Vec<f64>,
    pub x0: Vec<f64>,
}

pub fn load_system(args: &SystemArgs) -> Result<System, CliError> {
    let a = if let Some(path) = &args.matrix_file {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.clone(), source })?;
        SpdMatrix::new(parse_matrix(&text)?)?
    } else if let Some(spec) = &args.spectrum {
        spd_from_spectrum(&parse_spectrum(spec)?, args.seed)?
    } else {
        if args.n == 0 {
            return Err(CliError::Usage("--n must be at least 1".into()));
        }
        if !(args.cond >= 1.0) {
            return Err(CliError::Usage(format!("--cond must be at least 1, got {}", args.cond)));
        }
        random_spd(args.n, args.cond, args.seed)?
    };
    let n = a.order();
    log::info!("system of order {n}");
    Ok(System { a, b: random_vector(n, args.seed), x0: vec![0.0; n] })
}

pub fn solve_options(out: &OutputArgs) -> Result<SolveOptions, CliError> {
    if !(out.tol > 0.0) {
        return Err(CliError::Usage(format!("--tol must be positive, got {}", out.tol)));
    }
    if out.max_iter == Some(0) {
        return Err(CliError::Usage("--max-iter must be at least 1".into()));
    }
    Ok(SolveOptions { rel_tol: out.tol, max_iter: out.max_iter })
}

/// Writes the finished CSV to `--out`, or to stdout.
pub fn emit(out: &OutputArgs, csv: &[u8]) -> Result<(), CliError> {
    match &out.out {
        Some(path) => write_file(path, csv),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(csv)
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Write { path: "<stdout>".into(), source })
        }
    }
}

fn write_file(path: &Path, csv: &[u8]) -> Result<(), CliError> {
    fs::write(path, csv).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}
