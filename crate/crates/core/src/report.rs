//! CSV export for traces and experiment tables. Every file has a header row;
//! reals are written in scientific notation with 17 significant digits so
//! that they read back bit-exact, and absent values are empty cells.

use std::io::Write;

use crate::cg::CgTrace;
use crate::convergence::RatioTable;
use crate::equivalence::EquivalenceRow;
use crate::error::{check_dim, Error, Result};
use crate::fem::{AlphaForms, FemSystem, PcgTrace, RefinementRow};
use crate::lanczos::CorrespondenceRow;
use crate::linalg::vector::sub;
use crate::linalg::{a_norm, SpdMatrix};

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn output_err(e: impl std::fmt::Display) -> Error {
    Error::Output(e.to_string())
}

fn write_rows<W: Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header).map_err(output_err)?;
    for row in rows {
        out.write_record(&row).map_err(output_err)?;
    }
    out.flush().map_err(output_err)
}

/// Columns `k, rNorm, alpha, beta, aNormError`; the error column is filled
/// when the exact solution is supplied.
pub fn write_cg_trace<W: Write>(w: W, trace: &CgTrace, a: &SpdMatrix, x_star: Option<&[f64]>) -> Result<()> {
    if let Some(x) = x_star {
        check_dim(trace.matrix_order, x.len())?;
    }
    let mut rows = Vec::with_capacity(trace.steps.len());
    for s in &trace.steps {
        let err = match x_star {
            Some(x) => Some(a_norm(a, &sub(&s.x, x))?),
            None => None,
        };
        rows.push(vec![s.k.to_string(), num(s.r_norm), opt(s.alpha), opt(s.beta), opt(err)]);
    }
    write_rows(w, &["k", "rNorm", "alpha", "beta", "aNormError"], rows)
}

pub fn write_equivalence<W: Write>(w: W, rows: &[EquivalenceRow]) -> Result<()> {
    write_rows(
        w,
        &["k", "dev_cg_subspace", "dev_cg_bfgs", "dev_subspace_bfgs"],
        rows.iter().map(|r| vec![r.k.to_string(), num(r.dev_cg_subspace), num(r.dev_cg_bfgs), num(r.dev_subspace_bfgs)]),
    )
}

pub fn write_correspondence<W: Write>(w: W, rows: &[CorrespondenceRow]) -> Result<()> {
    write_rows(
        w,
        &["identity", "k", "deviation"],
        rows.iter().map(|r| vec![r.identity.to_string(), r.k.to_string(), num(r.deviation)]),
    )
}

/// Columns `k, ratio2, ratioK, q_bound, sqrt_q_bound, textbook_bound_rhs`,
/// followed by `sd_ratio2`, the steepest-descent two-term ratio at the same
/// step of a companion run (empty where that run has no such step).
pub fn write_ratio_table<W: Write>(w: W, table: &RatioTable, sd_ratio2: &[f64]) -> Result<()> {
    write_rows(
        w,
        &["k", "ratio2", "ratioK", "q_bound", "sqrt_q_bound", "textbook_bound_rhs", "sd_ratio2"],
        table.rows.iter().map(|r| {
            vec![
                r.k.to_string(),
                num(r.ratio2),
                num(r.ratio_k),
                num(table.q_bound),
                num(table.sqrt_q_bound),
                num(r.textbook_bound_rhs),
                opt(sd_ratio2.get(r.k - 1).copied()),
            ]
        }),
    )
}

/// Columns `x, u_h, u_exact, error` at every mesh node including both
/// boundary nodes, where the discrete solution is zero.
pub fn write_fem_solution<W: Write>(w: W, sys: &FemSystem, u: &[f64], exact: impl Fn(f64) -> f64) -> Result<()> {
    check_dim(sys.n_interior(), u.len())?;
    let n = sys.n_interior();
    let rows = (0..=n + 1).map(|i| {
        let x = if i == n + 1 { 1.0 } else { i as f64 * sys.h() };
        let uh = if i == 0 || i == n + 1 { 0.0 } else { u[i - 1] };
        let ue = exact(x);
        vec![num(x), num(uh), num(ue), num(uh - ue)]
    });
    write_rows(w, &["x", "u_h", "u_exact", "error"], rows)
}

pub fn write_refinement<W: Write>(w: W, rows: &[RefinementRow]) -> Result<()> {
    write_rows(
        w,
        &["n_interior", "h", "iterations", "l2_error", "ratio"],
        rows.iter().map(|r| vec![r.n_interior.to_string(), num(r.h), r.iterations.to_string(), num(r.l2_error), opt(r.ratio)]),
    )
}

/// Side-by-side coefficients of two PCG-shaped traces of equal length, with
/// the representation table's displayed step length alongside.
pub fn write_pcg_comparison<W: Write>(w: W, pcg: &PcgTrace, op: &PcgTrace, alphas: &[AlphaForms]) -> Result<()> {
    if pcg.steps.len() != op.steps.len() {
        return Err(Error::InvalidTrace(format!("{} vs {} steps", pcg.steps.len(), op.steps.len())));
    }
    let rows = pcg.steps.iter().zip(&op.steps).map(|(s, t)| {
        let displayed = alphas.iter().find(|f| f.k == s.k).map(|f| f.displayed);
        vec![
            s.k.to_string(),
            num(s.r_norm),
            opt(s.alpha),
            opt(t.alpha),
            opt(displayed),
            opt(s.beta),
            opt(t.beta),
        ]
    });
    write_rows(w, &["k", "rNorm", "alpha_pcg", "alpha_operator", "alpha_displayed", "beta_pcg", "beta_operator"], rows)
}
