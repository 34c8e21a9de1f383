//! Reference conjugate gradient solver with a full per-iteration trace.
//!
//! The solver uses `α_k = r_kᵀr_k / p_kᵀAp_k` and `β_{k-1} = r_kᵀr_k / r_{k-1}ᵀr_{k-1}`.
//! The other algebraically equal forms of both coefficients are evaluated in
//! [`coefficient_diagnostics`].

use std::collections::BTreeMap;

use crate::error::{check_dim, Error, Result};
use crate::linalg::vector::{axpy, dot, norm, relative_gap, sub};
use crate::linalg::{LinearOperator, SpdMatrix, SymMatrix};

/// Residuals are recomputed from scratch this often to bound drift.
pub const RESIDUAL_REFRESH: usize = 50;

/// Stopping rule shared by the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Stop once `‖r_k‖ ≤ rel_tol·‖b‖`.
    pub rel_tol: f64,
    /// Iteration cap; `None` means `10·n`.
    pub max_iter: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, max_iter: None }
    }
}

impl SolveOptions {
    pub fn with_tol(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    pub fn max_iter_for(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(10 * n)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidInput(format!("relative tolerance {} must be positive", self.rel_tol)));
        }
        Ok(())
    }
}

/// State of CG at iterate `k`. The last step of a trace carries the final
/// iterate and residual and has no direction.
#[derive(Debug, Clone, PartialEq)]
pub struct CgStep {
    pub k: usize,
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    /// `p_k`, absent on the terminal step.
    pub p: Option<Vec<f64>>,
    /// `α_k`, absent on the terminal step.
    pub alpha: Option<f64>,
    /// `β_{k-1}`, absent at `k = 0`.
    pub beta: Option<f64>,
    pub r_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgTrace {
    pub steps: Vec<CgStep>,
    pub converged: bool,
    pub matrix_order: usize,
}

impl CgTrace {
    /// Number of line-search steps taken.
    pub fn iterations(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn final_x(&self) -> &[f64] {
        &self.steps.last().expect("trace always holds the initial step").x
    }

    pub fn iterates(&self) -> Vec<&[f64]> {
        self.steps.iter().map(|s| s.x.as_slice()).collect()
    }

    pub fn residuals(&self) -> Vec<&[f64]> {
        self.steps.iter().map(|s| s.r.as_slice()).collect()
    }

    pub fn directions(&self) -> Vec<&[f64]> {
        self.steps.iter().filter_map(|s| s.p.as_deref()).collect()
    }

    /// `α₀, …, α_{m-1}`.
    pub fn alphas(&self) -> Vec<f64> {
        self.steps.iter().filter_map(|s| s.alpha).collect()
    }

    /// `β₀, …, β_{m-1}` (the last one comes from the terminal residual).
    pub fn betas(&self) -> Vec<f64> {
        self.steps.iter().filter_map(|s| s.beta).collect()
    }

    pub fn residual_norms(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.r_norm).collect()
    }
}

/// Exact line search for `J(x) = ½xᵀAx − bᵀx` along `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSearch {
    pub alpha: f64,
    pub x_next: Vec<f64>,
    /// `J(x) − J(x_next) = (rᵀd)² / (2dᵀAd)`.
    pub descent: f64,
}

pub fn line_search_step<A: LinearOperator + ?Sized>(a: &A, x: &[f64], d: &[f64], b: &[f64]) -> Result<LineSearch> {
    let n = a.dim();
    check_dim(n, x.len())?;
    check_dim(n, d.len())?;
    check_dim(n, b.len())?;
    let dad = dot(d, &a.apply(d));
    if !(dad > 0.0) {
        return Err(Error::DegenerateDirection);
    }
    let r = sub(b, &a.apply(x));
    let rd = dot(&r, d);
    let alpha = rd / dad;
    let mut x_next = x.to_vec();
    axpy(alpha, d, &mut x_next);
    Ok(LineSearch { alpha, x_next, descent: rd * rd / (2.0 * dad) })
}

/// `J(x) = ½xᵀAx − bᵀx`.
pub fn quadratic_objective<A: LinearOperator + ?Sized>(a: &A, b: &[f64], x: &[f64]) -> f64 {
    0.5 * dot(x, &a.apply(x)) - dot(b, x)
}

pub fn cg_solve<A: LinearOperator + ?Sized>(a: &A, b: &[f64], x0: &[f64], opts: &SolveOptions) -> Result<CgTrace> {
    let n = a.dim();
    check_dim(n, b.len())?;
    check_dim(n, x0.len())?;
    opts.validate()?;
    let max_iter = opts.max_iter_for(n);
    let threshold = opts.rel_tol * norm(b);

    let mut x = x0.to_vec();
    let mut r = sub(b, &a.apply(&x));
    let mut rr = dot(&r, &r);
    let mut p: Vec<f64> = Vec::new();
    let mut beta_prev: Option<f64> = None;
    let mut steps = Vec::new();

    for k in 0.. {
        let r_norm = rr.sqrt();
        if r_norm <= threshold || k == max_iter {
            let converged = r_norm <= threshold;
            steps.push(CgStep { k, x, r, p: None, alpha: None, beta: beta_prev, r_norm });
            log::debug!("cg: stopped at k={k}, ‖r‖={r_norm:e}, converged={converged}");
            return Ok(CgTrace { steps, converged, matrix_order: n });
        }
        if k == 0 {
            p = r.clone();
        } else {
            let beta = beta_prev.expect("beta set after first step");
            for (pi, ri) in p.iter_mut().zip(&r) {
                *pi = ri + beta * *pi;
            }
        }
        let ap = a.apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Breakdown { step: k, value: pap });
        }
        let alpha = rr / pap;
        steps.push(CgStep { k, x: x.clone(), r: r.clone(), p: Some(p.clone()), alpha: Some(alpha), beta: beta_prev, r_norm });

        axpy(alpha, &p, &mut x);
        if (k + 1) % RESIDUAL_REFRESH == 0 {
            r = sub(b, &a.apply(&x));
        } else {
            axpy(-alpha, &ap, &mut r);
        }
        let rr_next = dot(&r, &r);
        beta_prev = Some(rr_next / rr);
        rr = rr_next;
    }
    unreachable!()
}

fn worst_pairwise(values: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            worst = worst.max(relative_gap(*a, *b));
        }
    }
    worst
}

/// For every step, evaluates `β_{k-1}` by its four equal expressions and
/// `α_k` by its three, and reports the worst pairwise relative deviation
/// seen for each identity.
///
/// Keys: `"beta"` (all four forms), `"alpha"` (`r_kᵀr_k` against `p_kᵀr_k`)
/// and `"alpha_r0"` (`p_kᵀr₀` against the other two). The last form relies on
/// conjugacy of `p_k` to every earlier direction, so in floating point its
/// relative error grows roughly like `ε·κ·‖r₀‖²/‖r_k‖²` and it is only
/// meaningful while the residual is still large.
pub fn coefficient_diagnostics(trace: &CgTrace, a: &SpdMatrix) -> Result<BTreeMap<&'static str, f64>> {
    if trace.steps.is_empty() {
        return Err(Error::InvalidTrace("empty trace".into()));
    }
    check_dim(a.order(), trace.matrix_order)?;
    let r0 = &trace.steps[0].r;
    let mut beta_dev = 0.0f64;
    let mut alpha_dev = 0.0f64;
    let mut alpha_r0_dev = 0.0f64;
    // Only coefficients the method actually used are checked: the terminal
    // step's β would build a direction that is never formed, and at full
    // termination its residual is pure rounding noise.
    for (k, step) in trace.steps.iter().enumerate() {
        let Some(p) = &step.p else { continue };
        let r = &step.r;
        if k > 0 {
            let prev = &trace.steps[k - 1];
            let pp = prev.p.as_ref().expect("non-terminal predecessor");
            let r_prev = &prev.r;
            let app = a.matvec(pp);
            let ar = a.matvec(r);
            let dr = sub(r_prev, r);
            let beta_forms = [
                -dot(pp, &ar) / dot(pp, &app),
                -dot(pp, &ar) / dot(pp, &a.matvec(r_prev)),
                -dot(&dr, r) / dot(&dr, r_prev),
                dot(r, r) / dot(r_prev, r_prev),
            ];
            beta_dev = beta_dev.max(worst_pairwise(&beta_forms));
        }
        let pap = dot(p, &a.matvec(p));
        let (rr, pr, pr0) = (dot(r, r) / pap, dot(p, r) / pap, dot(p, r0) / pap);
        alpha_dev = alpha_dev.max(relative_gap(rr, pr));
        alpha_r0_dev = alpha_r0_dev.max(relative_gap(rr, pr0)).max(relative_gap(pr, pr0));
    }
    Ok(BTreeMap::from([("alpha", alpha_dev), ("alpha_r0", alpha_r0_dev), ("beta", beta_dev)]))
}

/// `Σ p_i p_iᵀ / (p_iᵀAp_i)` over a complete set of A-conjugate directions.
pub fn explicit_inverse(a: &SpdMatrix, dirs: &[&[f64]]) -> Result<SymMatrix> {
    let n = a.order();
    if dirs.len() < n {
        return Err(Error::IncompleteBasis { expected: n, found: dirs.len() });
    }
    for d in dirs {
        check_dim(n, d.len())?;
    }
    check_conjugacy(a, dirs, 1e-8)?;
    let weights: Vec<f64> = dirs.iter().map(|p| 1.0 / a.inner(p, p)).collect();
    Ok(SymMatrix::from_fn(n, |i, j| dirs.iter().zip(&weights).map(|(p, w)| w * p[i] * p[j]).sum()))
}

/// Rejects any pair with `|p_iᵀAp_j| > tol·√(p_iᵀAp_i·p_jᵀAp_j)`.
pub(crate) fn check_conjugacy(a: &SpdMatrix, dirs: &[&[f64]], tol: f64) -> Result<()> {
    let a_dirs: Vec<Vec<f64>> = dirs.iter().map(|d| a.matvec(d)).collect();
    let energy: Vec<f64> = dirs.iter().zip(&a_dirs).map(|(d, ad)| dot(d, ad)).collect();
    if energy.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::DegenerateDirection);
    }
    for i in 0..dirs.len() {
        for j in 0..i {
            let deviation = dot(dirs[i], &a_dirs[j]).abs() / (energy[i] * energy[j]).sqrt();
            if deviation > tol {
                return Err(Error::NotConjugate { i, j, deviation });
            }
        }
    }
    Ok(())
}
