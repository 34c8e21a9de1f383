//! Seeded fixtures: orthogonal matrices, SPD matrices with a prescribed
//! spectrum, spectra with a prescribed condition number, random vectors.
//!
//! Every generator draws from its own ChaCha stream so that, for one seed,
//! the orthogonal factor, the spectrum and a right-hand side are independent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::sym::{SpdMatrix, SymMatrix};
use super::vector::{dot, norm};
use crate::error::{Error, Result};

const STREAM_ORTHOGONAL: u64 = 0;
const STREAM_SPECTRUM: u64 = 1;
const STREAM_VECTOR: u64 = 2;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Columns of a random orthogonal matrix: Gram–Schmidt (applied twice) on a
/// seeded Gaussian matrix, which leaves the triangular factor with a positive
/// diagonal.
pub fn random_orthogonal(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed, STREAM_ORTHOGONAL);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut g: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
        for _pass in 0..2 {
            for q in &cols {
                let c = dot(q, &g);
                for (gi, qi) in g.iter_mut().zip(q) {
                    *gi -= c * qi;
                }
            }
        }
        let len = norm(&g);
        cols.push(g.iter().map(|x| x / len).collect());
    }
    cols
}

/// `A = QΛQᵀ` with `Q = random_orthogonal(n, seed)`.
pub fn spd_from_spectrum(eigenvalues: &[f64], seed: u64) -> Result<SpdMatrix> {
    if eigenvalues.is_empty() {
        return Err(Error::InvalidInput("spectrum is empty".into()));
    }
    if let Some(bad) = eigenvalues.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidInput(format!("eigenvalue {bad} is not positive")));
    }
    let n = eigenvalues.len();
    if eigenvalues.iter().all(|l| *l == eigenvalues[0]) {
        return SpdMatrix::from_diagonal(eigenvalues);
    }
    let q = random_orthogonal(n, seed);
    let sym = SymMatrix::from_fn(n, |i, j| eigenvalues.iter().zip(&q).map(|(l, col)| l * col[i] * col[j]).sum());
    SpdMatrix::new(sym)
}

/// Sorted spectrum with `λ_min = 1`, `λ_max = cond` and interior eigenvalues
/// drawn uniformly in between.
///
/// A uniform spread keeps the extreme eigenvalues from being isolated, so CG
/// in floating point stays close to its exact-arithmetic behaviour for the
/// sizes used here. Log-uniform spectra cluster near 1 and lose orthogonality
/// within a handful of steps.
pub fn condition_spectrum(n: usize, cond: f64, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidInput("spectrum size must be at least 1".into()));
    }
    if !(cond >= 1.0) || !cond.is_finite() {
        return Err(Error::InvalidInput(format!("condition number {cond} must be ≥ 1")));
    }
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let mut r = rng(seed, STREAM_SPECTRUM);
    let mut spectrum: Vec<f64> = std::iter::once(1.0)
        .chain((0..n - 2).map(|_| 1.0 + r.random::<f64>() * (cond - 1.0)))
        .chain(std::iter::once(cond))
        .collect();
    spectrum.sort_by(f64::total_cmp);
    Ok(spectrum)
}

/// `spd_from_spectrum(condition_spectrum(n, cond, seed), seed)`.
pub fn random_spd(n: usize, cond: f64, seed: u64) -> Result<SpdMatrix> {
    spd_from_spectrum(&condition_spectrum(n, cond, seed)?, seed)
}

/// Standard normal vector.
pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed, STREAM_VECTOR);
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}
