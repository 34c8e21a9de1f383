//! Python bindings: matrices and vectors cross the boundary as nested lists
//! of floats, results come back as plain read-only objects.

use krylov_core::convergence::{cg_ratio_table, kantorovich_factor, lemma_c_inequality};
use krylov_core::equivalence::equivalence_report;
use krylov_core::fem::{assemble_1d, compare_traces, load_vector, operator_cg_solve, pcg_riesz_solve, refinement_study, Load};
use krylov_core::lanczos::{correspondence_summary, lanczos_cholesky_solve, verify_correspondence};
use krylov_core::{Error, SolveOptions, SpdMatrix};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

/// Input problems become `ValueError`; numerical failures `RuntimeError`.
pub fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::Parse { .. } | Error::NotPositiveDefinite { .. } | Error::EmptyStart
    )
}

fn py_err(e: Error) -> PyErr {
    if is_input_error(&e) {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn spd(rows: &[Vec<f64>]) -> PyResult<SpdMatrix> {
    SpdMatrix::from_rows(rows).map_err(py_err)
}

fn options(tol: f64, max_iter: Option<usize>) -> SolveOptions {
    SolveOptions { rel_tol: tol, max_iter }
}

#[pyclass(get_all, frozen)]
pub struct CgResult {
    x: Vec<f64>,
    iterations: usize,
    converged: bool,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    residual_norms: Vec<f64>,
}

#[pyclass(get_all, frozen)]
pub struct RatioRow {
    k: usize,
    a_norm_error: f64,
    ratio2: f64,
    ratio_k: f64,
    textbook_bound_rhs: f64,
}

#[pyclass(get_all, frozen)]
pub struct FemResult {
    nodes: Vec<f64>,
    u: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Conjugate gradients on the dense SPD matrix `a`, starting from `x0`
/// (zero when omitted).
#[pyfunction]
#[pyo3(signature = (a, b, x0=None, tol=1e-10, max_iter=None))]
fn cg_solve(a: Vec<Vec<f64>>, b: Vec<f64>, x0: Option<Vec<f64>>, tol: f64, max_iter: Option<usize>) -> PyResult<CgResult> {
    let a = spd(&a)?;
    let x0 = x0.unwrap_or_else(|| vec![0.0; a.order()]);
    let t = krylov_core::cg_solve(&a, &b, &x0, &options(tol, max_iter)).map_err(py_err)?;
    Ok(CgResult {
        x: t.final_x().to_vec(),
        iterations: t.iterations(),
        converged: t.converged,
        alphas: t.alphas(),
        betas: t.betas(),
        residual_norms: t.residual_norms(),
    })
}

/// Random SPD matrix with eigenvalues spread over `[1, cond]`.
#[pyfunction]
fn random_spd(n: usize, cond: f64, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    Ok(krylov_core::linalg::random_spd(n, cond, seed).map_err(py_err)?.sym().to_rows())
}

/// Seeded rotation of `diag(eigenvalues)`.
#[pyfunction]
fn spd_from_spectrum(eigenvalues: Vec<f64>, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    Ok(krylov_core::linalg::spd_from_spectrum(&eigenvalues, seed).map_err(py_err)?.sym().to_rows())
}

#[pyfunction]
fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    krylov_core::linalg::random_vector(n, seed)
}

/// Worst pairwise relative deviation between the CG, plane-minimization and
/// BFGS iterates over the whole run.
#[pyfunction]
#[pyo3(signature = (a, b, tol=1e-10))]
fn equivalence_deviation(a: Vec<Vec<f64>>, b: Vec<f64>, tol: f64) -> PyResult<f64> {
    let a = spd(&a)?;
    let rows = equivalence_report(&a, &b, &vec![0.0; a.order()], &options(tol, None)).map_err(py_err)?;
    Ok(rows.iter().map(|r| r.max()).fold(0.0, f64::max))
}

/// Worst deviation per CG/Lanczos correspondence identity.
#[pyfunction]
#[pyo3(signature = (a, b, tol=1e-10))]
fn correspondence(a: Vec<Vec<f64>>, b: Vec<f64>, tol: f64) -> PyResult<Vec<(String, f64)>> {
    let a = spd(&a)?;
    let x0 = vec![0.0; a.order()];
    let opts = options(tol, None);
    let cg = krylov_core::cg_solve(&a, &b, &x0, &opts).map_err(py_err)?;
    let lz = lanczos_cholesky_solve(&a, &b, &x0, &opts).map_err(py_err)?;
    let rows = verify_correspondence(&cg, &lz).map_err(py_err)?;
    Ok(correspondence_summary(&rows).into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

/// Two-term and k-term CG error ratios with the textbook estimate.
#[pyfunction]
#[pyo3(signature = (a, b, tol=1e-10))]
fn ratio_table(a: Vec<Vec<f64>>, b: Vec<f64>, tol: f64) -> PyResult<Vec<RatioRow>> {
    let a = spd(&a)?;
    let t = cg_ratio_table(&a, &b, &vec![0.0; a.order()], &options(tol, None)).map_err(py_err)?;
    Ok(t.rows
        .iter()
        .map(|r| RatioRow {
            k: r.k,
            a_norm_error: r.a_norm_error,
            ratio2: r.ratio2,
            ratio_k: r.ratio_k,
            textbook_bound_rhs: r.textbook_bound_rhs,
        })
        .collect())
}

#[pyfunction(name = "kantorovich_factor")]
fn kantorovich(lambda_min: f64, lambda_max: f64) -> PyResult<f64> {
    kantorovich_factor(lambda_min, lambda_max).map_err(py_err)
}

/// `(sqrt_holds, plain_holds, c12, c23, c13)` for `0 < l1 < l2 < l3`.
#[pyfunction]
fn lemma_check(l1: f64, l2: f64, l3: f64) -> PyResult<(bool, bool, f64, f64, f64)> {
    let c = lemma_c_inequality(l1, l2, l3).map_err(py_err)?;
    Ok((c.sqrt_holds, c.plain_holds, c.c12, c.c23, c.c13))
}

/// Riesz-preconditioned CG for `−u'' + c·u = f` on `n` interior nodes;
/// `load` is `"const1"` or `"sin-benchmark"`.
#[pyfunction]
#[pyo3(signature = (n, c=0.0, load="sin-benchmark", tol=1e-10))]
fn fem_solve(n: usize, c: f64, load: &str, tol: f64) -> PyResult<FemResult> {
    let load = Load::parse(load).map_err(py_err)?;
    let sys = assemble_1d(n, c).map_err(py_err)?;
    let f = load_vector(load.source(c), &sys);
    let t = pcg_riesz_solve(&sys, &f, &vec![0.0; n], &options(tol, None)).map_err(py_err)?;
    Ok(FemResult { nodes: sys.nodes(), u: t.final_u().to_vec(), iterations: t.iterations(), converged: t.converged })
}

/// Largest field deviation between the PCG and operator-form CG traces.
#[pyfunction]
#[pyo3(signature = (n, c=0.0, load="const1", tol=1e-10))]
fn fem_trace_deviation(n: usize, c: f64, load: &str, tol: f64) -> PyResult<f64> {
    let load = Load::parse(load).map_err(py_err)?;
    let sys = assemble_1d(n, c).map_err(py_err)?;
    let f = load_vector(load.source(c), &sys);
    let opts = options(tol, None);
    let pcg = pcg_riesz_solve(&sys, &f, &vec![0.0; n], &opts).map_err(py_err)?;
    let op = operator_cg_solve(&sys, &f, &vec![0.0; n], &opts).map_err(py_err)?;
    Ok(compare_traces(&pcg, &op).map_err(py_err)?.max())
}

/// `(n_interior, l2_error)` per dyadic refinement level.
#[pyfunction]
#[pyo3(signature = (n, levels, c=0.0, load="sin-benchmark", tol=1e-12))]
fn fem_refinement(n: usize, levels: usize, c: f64, load: &str, tol: f64) -> PyResult<Vec<(usize, f64)>> {
    let load = Load::parse(load).map_err(py_err)?;
    let rows = refinement_study(n, c, load, levels, &options(tol, None)).map_err(py_err)?;
    Ok(rows.iter().map(|r| (r.n_interior, r.l2_error)).collect())
}

#[pymodule]
fn krylov(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<CgResult>()?;
    m.add_class::<RatioRow>()?;
    m.add_class::<FemResult>()?;
    m.add_function(wrap_pyfunction!(cg_solve, m)?)?;
    m.add_function(wrap_pyfunction!(random_spd, m)?)?;
    m.add_function(wrap_pyfunction!(spd_from_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(random_vector, m)?)?;
    m.add_function(wrap_pyfunction!(equivalence_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(correspondence, m)?)?;
    m.add_function(wrap_pyfunction!(ratio_table, m)?)?;
    m.add_function(wrap_pyfunction!(kantorovich, m)?)?;
    m.add_function(wrap_pyfunction!(lemma_check, m)?)?;
    m.add_function(wrap_pyfunction!(fem_solve, m)?)?;
    m.add_function(wrap_pyfunction!(fem_trace_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(fem_refinement, m)?)?;
    Ok(())
}
