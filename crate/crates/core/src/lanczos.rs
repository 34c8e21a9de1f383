//! Lanczos tridiagonalization and the Lanczos + LDLᵀ solver, with checks of
//! the identities that tie them to CG.
//!
//! Indexing is 0-based throughout: `v₀ = r₀/‖r₀‖`, `T_k` has diagonal
//! `σ₀..σ_{k-1}` and off-diagonal `τ₁..τ_{k-1}`, and the LDLᵀ factors of
//! `T_k` carry `l_{1,0}..l_{k-1,k-2}` and `δ₀..δ_{k-1}`. The solver's
//! `x̄_{k+1} = x̄_k + ᾱ_k·p̄_k` makes `x̄_k` correspond to CG's `x_k`.

use std::collections::BTreeMap;

use crate::cg::{CgTrace, SolveOptions};
use crate::error::{check_dim, Error, Result};
use crate::linalg::vector::{axpy, dot, norm, relative_gap, sub};
use crate::linalg::{LdlFactors, SpdMatrix, Tridiag};

/// `τ_k ≤ BREAKDOWN_TOL·‖A‖_max` counts as an exact invariant subspace.
pub const BREAKDOWN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LanczosData {
    /// `v₀..v_{k-1}`, the columns of `V_k`.
    pub v: Vec<Vec<f64>>,
    /// `v_k`, absent after a breakdown.
    pub v_next: Option<Vec<f64>>,
    pub t: Tridiag,
    /// `τ₀ = ‖r₀‖`.
    pub tau0: f64,
    /// `τ_k`, the coupling to `v_k` in `AV_k = V_kT_k + τ_k v_k e_kᵀ`.
    pub tau_next: f64,
    /// Step `k` at which `τ_k` fell below the breakdown tolerance.
    pub breakdown_at: Option<usize>,
}

impl LanczosData {
    pub fn steps(&self) -> usize {
        self.v.len()
    }

    /// `‖AV_k − V_kT_k − τ_k v_k e_kᵀ‖_max`.
    pub fn three_term_residual(&self, a: &SpdMatrix) -> f64 {
        let k = self.steps();
        let (sigma, tau) = (self.t.diag(), self.t.off());
        let mut worst = 0.0f64;
        for j in 0..k {
            let mut res = a.matvec(&self.v[j]);
            axpy(-sigma[j], &self.v[j], &mut res);
            if j > 0 {
                axpy(-tau[j - 1], &self.v[j - 1], &mut res);
            }
            if j + 1 < k {
                axpy(-tau[j], &self.v[j + 1], &mut res);
            } else if let Some(v_next) = &self.v_next {
                axpy(-self.tau_next, v_next, &mut res);
            }
            worst = res.iter().fold(worst, |m, x| m.max(x.abs()));
        }
        worst
    }

    /// `max_{i≠j} |v_iᵀv_j|` and `max_i |‖v_i‖ − 1|`.
    pub fn orthogonality(&self) -> (f64, f64) {
        let mut off = 0.0f64;
        let mut unit = 0.0f64;
        for (i, vi) in self.v.iter().enumerate() {
            unit = unit.max((norm(vi) - 1.0).abs());
            for vj in &self.v[..i] {
                off = off.max(dot(vi, vj).abs());
            }
        }
        (off, unit)
    }
}

/// Three-term Lanczos recurrence with optional full reorthogonalization.
struct LanczosRecurrence<'a> {
    a: &'a SpdMatrix,
    tol: f64,
    reorthogonalize: bool,
    v: Vec<Vec<f64>>,
    /// `τ_j` coupling the last stored column to its predecessor.
    tau: f64,
}

impl<'a> LanczosRecurrence<'a> {
    fn new(a: &'a SpdMatrix, r0: &[f64], reorthogonalize: bool) -> Result<(Self, f64)> {
        check_dim(a.order(), r0.len())?;
        let tau0 = norm(r0);
        if tau0 == 0.0 {
            return Err(Error::EmptyStart);
        }
        let v0 = r0.iter().map(|x| x / tau0).collect();
        let tol = BREAKDOWN_TOL * a.max_abs();
        Ok((Self { a, tol, reorthogonalize, v: vec![v0], tau: 0.0 }, tau0))
    }

    /// From the newest column `v_j`, computes `σ_j` and `τ_{j+1}`, and
    /// returns `v_{j+1}` unless the recurrence broke down.
    fn advance(&mut self) -> (f64, f64, Option<Vec<f64>>) {
        let j = self.v.len() - 1;
        let vj = &self.v[j];
        let mut w = self.a.matvec(vj);
        if j > 0 {
            axpy(-self.tau, &self.v[j - 1], &mut w);
        }
        let sigma = dot(vj, &w);
        axpy(-sigma, vj, &mut w);
        if self.reorthogonalize {
            for _ in 0..2 {
                for vi in &self.v {
                    let c = dot(vi, &w);
                    axpy(-c, vi, &mut w);
                }
            }
        }
        let tau_next = norm(&w);
        if tau_next <= self.tol {
            return (sigma, tau_next, None);
        }
        (sigma, tau_next, Some(w.iter().map(|x| x / tau_next).collect()))
    }
}

/// Runs up to `k_max` Lanczos steps from `r0`, stopping early on breakdown.
pub fn lanczos_process(a: &SpdMatrix, r0: &[f64], k_max: usize, reorthogonalize: bool) -> Result<LanczosData> {
    if k_max == 0 {
        return Err(Error::InvalidInput("need at least one Lanczos step".into()));
    }
    let (mut rec, tau0) = LanczosRecurrence::new(a, r0, reorthogonalize)?;
    let mut sigmas = Vec::new();
    let mut taus = Vec::new();
    loop {
        let (sigma, tau_next, v_next) = rec.advance();
        sigmas.push(sigma);
        let k = sigmas.len();
        match v_next {
            None => {
                return Ok(LanczosData {
                    v: rec.v,
                    v_next: None,
                    t: Tridiag::new(sigmas, taus)?,
                    tau0,
                    tau_next,
                    breakdown_at: Some(k),
                })
            }
            Some(v) if k == k_max => {
                return Ok(LanczosData {
                    v: rec.v,
                    v_next: Some(v),
                    t: Tridiag::new(sigmas, taus)?,
                    tau0,
                    tau_next,
                    breakdown_at: None,
                })
            }
            Some(v) => {
                taus.push(tau_next);
                rec.tau = tau_next;
                rec.v.push(v);
            }
        }
    }
}

/// Everything the solver has accumulated after `k` steps: the LDLᵀ factors
/// of `T_k`, the columns `p̄₀..p̄_{k-1}` of `W̄_k = V_kL_k⁻ᵀ` and
/// `w_k = (ᾱ₀, …, ᾱ_{k-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct LanczosSnapshot {
    pub factors: LdlFactors,
    pub w_bar: Vec<Vec<f64>>,
    pub w: Vec<f64>,
}

/// Incremental Lanczos + LDLᵀ solver. Each [`step`](Self::step) appends one
/// entry to `L`, `D`, `w` and one column to `W̄` without touching the rest.
pub struct LanczosCholeskySolver<'a> {
    rec: LanczosRecurrence<'a>,
    tau0: f64,
    /// `τ_k` coupling the current column to the previous one (unused at k = 0).
    tau_in: f64,
    sigmas: Vec<f64>,
    taus: Vec<f64>,
    factors: LdlFactors,
    p_bar: Vec<Vec<f64>>,
    alpha_bar: Vec<f64>,
    x_bar: Vec<Vec<f64>>,
    /// `(L⁻¹τ₀e₁)_{k-1}`.
    y: f64,
    residual_estimates: Vec<f64>,
    exhausted: Option<(usize, f64)>,
}

impl<'a> LanczosCholeskySolver<'a> {
    pub fn new(a: &'a SpdMatrix, b: &[f64], x0: &[f64]) -> Result<Self> {
        check_dim(a.order(), b.len())?;
        check_dim(a.order(), x0.len())?;
        let r0 = sub(b, &a.matvec(x0));
        let (rec, tau0) = LanczosRecurrence::new(a, &r0, false)?;
        Ok(Self {
            rec,
            tau0,
            tau_in: 0.0,
            sigmas: Vec::new(),
            taus: Vec::new(),
            factors: LdlFactors::empty_bidiagonal(),
            p_bar: Vec::new(),
            alpha_bar: Vec::new(),
            x_bar: vec![x0.to_vec()],
            y: 0.0,
            residual_estimates: vec![tau0],
            exhausted: None,
        })
    }

    /// Number of completed steps `k` (so `x̄_k` is the latest iterate).
    pub fn steps(&self) -> usize {
        self.alpha_bar.len()
    }

    pub fn x_bar(&self) -> &[f64] {
        self.x_bar.last().expect("x̄₀ always present")
    }

    /// `‖b − A·x̄_k‖` as given by the recurrence: `τ_k·|ᾱ_{k-1}|`.
    pub fn residual_estimate(&self) -> f64 {
        *self.residual_estimates.last().expect("initial estimate present")
    }

    /// True once the Krylov space is exhausted (breakdown).
    pub fn is_exhausted(&self) -> bool {
        self.exhausted.is_some()
    }

    /// Performs one step: `σ_k`, `τ_{k+1}`, `l_{k,k-1}`, `δ_k`, `p̄_k`, `ᾱ_k`
    /// and `x̄_{k+1}`.
    pub fn step(&mut self) -> Result<()> {
        if let Some((step, _)) = self.exhausted {
            return Err(Error::InvalidInput(format!("Krylov space exhausted at step {step}")));
        }
        let k = self.steps();
        let (sigma, tau_next, v_next) = self.rec.advance();
        self.factors.extend_tridiagonal(sigma, self.tau_in)?;
        self.sigmas.push(sigma);
        if k > 0 {
            self.taus.push(self.tau_in);
        }

        let v_k = self.rec.v.last().expect("current column");
        let mut p = v_k.clone();
        self.y = if k == 0 {
            self.tau0
        } else {
            let l = self.factors.l(k, k - 1);
            axpy(-l, &self.p_bar[k - 1], &mut p);
            -l * self.y
        };
        let alpha = self.y / self.factors.diag()[k];
        let mut x = self.x_bar().to_vec();
        axpy(alpha, &p, &mut x);

        self.p_bar.push(p);
        self.alpha_bar.push(alpha);
        self.x_bar.push(x);
        self.residual_estimates.push(tau_next * alpha.abs());

        match v_next {
            Some(v) => {
                self.rec.tau = tau_next;
                self.tau_in = tau_next;
                self.rec.v.push(v);
            }
            None => self.exhausted = Some((k + 1, tau_next)),
        }
        Ok(())
    }

    /// Copies the accumulated `(L, D)`, `W̄` and `w`.
    pub fn snapshot(&self) -> LanczosSnapshot {
        LanczosSnapshot { factors: self.factors.clone(), w_bar: self.p_bar.clone(), w: self.alpha_bar.clone() }
    }

    fn into_trace(self, converged: bool) -> Result<LanczosSolveTrace> {
        let k = self.steps();
        let mut v = self.rec.v;
        let (v_next, tau_next, breakdown_at) = match self.exhausted {
            Some((step, tau)) => (None, tau, Some(step)),
            None => {
                let next = v.pop().filter(|_| v.len() == k);
                (next, self.tau_in, None)
            }
        };
        let data = LanczosData { v, v_next, t: Tridiag::new(self.sigmas, self.taus)?, tau0: self.tau0, tau_next, breakdown_at };
        Ok(LanczosSolveTrace {
            x_bar: self.x_bar,
            p_bar: self.p_bar,
            alpha_bar: self.alpha_bar,
            factors: self.factors,
            residual_estimates: self.residual_estimates,
            converged,
            data,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanczosSolveTrace {
    /// `x̄₀ = x₀, x̄₁, …`
    pub x_bar: Vec<Vec<f64>>,
    pub p_bar: Vec<Vec<f64>>,
    pub alpha_bar: Vec<f64>,
    pub factors: LdlFactors,
    /// `‖r̄_k‖` from the recurrence, one per iterate.
    pub residual_estimates: Vec<f64>,
    pub converged: bool,
    pub data: LanczosData,
}

impl LanczosSolveTrace {
    pub fn iterations(&self) -> usize {
        self.alpha_bar.len()
    }

    pub fn final_x(&self) -> &[f64] {
        self.x_bar.last().expect("x̄₀ always present")
    }

    /// Worst `|p̄_iᵀAp̄_j| / √(δ_iδ_j)` for `i ≠ j` and worst
    /// `|p̄_iᵀAp̄_i − δ_i| / δ_i`.
    pub fn conjugacy(&self, a: &SpdMatrix) -> (f64, f64) {
        let d = self.factors.diag();
        let ap: Vec<Vec<f64>> = self.p_bar.iter().map(|p| a.matvec(p)).collect();
        let mut off = 0.0f64;
        let mut diag = 0.0f64;
        for i in 0..self.p_bar.len() {
            diag = diag.max((dot(&self.p_bar[i], &ap[i]) - d[i]).abs() / d[i]);
            for j in 0..i {
                off = off.max(dot(&self.p_bar[i], &ap[j]).abs() / (d[i] * d[j]).sqrt());
            }
        }
        (off, diag)
    }
}

/// Lanczos + incrementally accumulated LDLᵀ, stopping when the recurrence's
/// residual estimate drops to `rel_tol·‖b‖`.
pub fn lanczos_cholesky_solve(a: &SpdMatrix, b: &[f64], x0: &[f64], opts: &SolveOptions) -> Result<LanczosSolveTrace> {
    opts.validate()?;
    let threshold = opts.rel_tol * norm(b);
    let max_iter = opts.max_iter_for(a.order());
    let mut solver = match LanczosCholeskySolver::new(a, b, x0) {
        Ok(s) => s,
        Err(Error::EmptyStart) => {
            // x0 already solves the system.
            let data = LanczosData {
                v: Vec::new(),
                v_next: None,
                t: Tridiag::new(vec![0.0], vec![])?,
                tau0: 0.0,
                tau_next: 0.0,
                breakdown_at: Some(0),
            };
            return Ok(LanczosSolveTrace {
                x_bar: vec![x0.to_vec()],
                p_bar: Vec::new(),
                alpha_bar: Vec::new(),
                factors: LdlFactors::empty_bidiagonal(),
                residual_estimates: vec![0.0],
                converged: true,
                data,
            });
        }
        Err(e) => return Err(e),
    };
    loop {
        if solver.residual_estimate() <= threshold {
            return solver.into_trace(true);
        }
        if let Some((step, _)) = solver.exhausted {
            let residual = norm(&sub(b, &a.matvec(solver.x_bar())));
            if residual > threshold {
                return Err(Error::PrematureBreakdown { step, residual });
            }
            return solver.into_trace(true);
        }
        if solver.steps() == max_iter {
            return solver.into_trace(false);
        }
        solver.step()?;
    }
}

/// One evaluated correspondence identity.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceRow {
    pub identity: &'static str,
    pub k: usize,
    pub deviation: f64,
}

pub const CORRESPONDENCE_IDENTITIES: [&str; 7] = ["v", "p_bar", "alpha_bar", "sigma", "tau", "l", "delta"];

/// Checks, at every step both traces share, the seven identities
/// `v_k = (−1)^k r_k/‖r_k‖`, `p̄_k = (−1)^k p_k/‖r_k‖`,
/// `ᾱ_k = (−1)^k‖r_k‖α_k`, `σ_k = 1/α_k + β_{k-1}/α_{k-1}`,
/// `τ_k = √β_{k-1}/α_{k-1}`, `l_{k,k-1} = ‖r_k‖/‖r_{k-1}‖`, `δ_k = 1/α_k`,
/// each as a relative deviation. The two vector identities are compared
/// after scaling back by `‖r_k‖`, against the largest `‖r_j‖` (resp. `‖p_j‖`)
/// of the run: both methods carry absolute rounding of order `ε‖r₀‖`, which
/// a comparison of unit vectors would inflate by `‖r₀‖/‖r_k‖` near
/// convergence.
pub fn verify_correspondence(cg: &CgTrace, lz: &LanczosSolveTrace) -> Result<Vec<CorrespondenceRow>> {
    check_dim(cg.matrix_order, lz.x_bar[0].len())?;
    if cg.steps[0].x != lz.x_bar[0] {
        return Err(Error::InvalidInput("CG and Lanczos runs start from different x0".into()));
    }
    if relative_gap(cg.steps[0].r_norm, lz.data.tau0) > 1e-12 {
        return Err(Error::InvalidInput("CG and Lanczos runs have different initial residuals".into()));
    }
    let alphas = cg.alphas();
    let m = alphas.len().min(lz.iterations());
    let (sigma, tau) = (lz.data.t.diag(), lz.data.t.off());
    let (delta, factors) = (lz.factors.diag(), &lz.factors);
    let r_scale = cg.steps.iter().map(|s| s.r_norm).fold(0.0, f64::max);
    let p_scale = cg.steps.iter().filter_map(|s| s.p.as_deref()).map(norm).fold(0.0, f64::max);
    let mut rows = Vec::with_capacity(7 * m);
    let mut push = |identity, k, deviation| rows.push(CorrespondenceRow { identity, k, deviation });
    for k in 0..m {
        let step = &cg.steps[k];
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let rn = step.r_norm;
        let p = step.p.as_ref().expect("step with α has a direction");
        let v_scaled: Vec<f64> = lz.data.v[k].iter().map(|x| sign * x * rn).collect();
        let p_scaled: Vec<f64> = lz.p_bar[k].iter().map(|x| sign * x * rn).collect();
        push("v", k, norm(&sub(&v_scaled, &step.r)) / r_scale);
        push("p_bar", k, norm(&sub(&p_scaled, p)) / p_scale);
        push("alpha_bar", k, relative_gap(lz.alpha_bar[k], sign * rn * alphas[k]));
        let sigma_pred = if k == 0 {
            1.0 / alphas[0]
        } else {
            1.0 / alphas[k] + step.beta.expect("β_{k-1} for k ≥ 1") / alphas[k - 1]
        };
        push("sigma", k, relative_gap(sigma[k], sigma_pred));
        if k > 0 {
            let beta = step.beta.expect("β_{k-1} for k ≥ 1");
            push("tau", k, relative_gap(tau[k - 1], beta.sqrt() / alphas[k - 1]));
            push("l", k, relative_gap(factors.l(k, k - 1), rn / cg.steps[k - 1].r_norm));
        }
        push("delta", k, relative_gap(delta[k], 1.0 / alphas[k]));
    }
    Ok(rows)
}

/// Worst deviation per identity name.
pub fn correspondence_summary(rows: &[CorrespondenceRow]) -> BTreeMap<&'static str, f64> {
    let mut out: BTreeMap<&'static str, f64> = CORRESPONDENCE_IDENTITIES.iter().map(|n| (*n, 0.0)).collect();
    for row in rows {
        let e = out.entry(row.identity).or_insert(0.0);
        *e = e.max(row.deviation);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterminantCheck {
    pub prod_inv_alpha: f64,
    pub det_oracle: f64,
    pub rel_dev: f64,
}

/// Compares `Π_{k<n} 1/α_k` with `det(A)` from the LDLᵀ pivots. Requires a
/// run of at least `n` steps; a run that stops early had a starting
/// residual inside a proper invariant subspace and the identity does not
/// apply.
pub fn determinant_identity(cg: &CgTrace, a: &SpdMatrix) -> Result<DeterminantCheck> {
    let n = a.order();
    check_dim(n, cg.matrix_order)?;
    let alphas = cg.alphas();
    if alphas.len() < n {
        return Err(Error::NotApplicable(format!("CG stopped after {} of {n} steps", alphas.len())));
    }
    let prod_inv_alpha: f64 = alphas[..n].iter().map(|a| 1.0 / a).product();
    let det_oracle = a.determinant();
    Ok(DeterminantCheck { prod_inv_alpha, det_oracle, rel_dev: (prod_inv_alpha - det_oracle).abs() / det_oracle })
}

/// `max_k |Π_{i<k} β_i − ‖r_k‖²/‖r₀‖²| / (‖r_k‖²/‖r₀‖²)` over all recorded `k ≥ 1`.
pub fn beta_product_identity(cg: &CgTrace) -> f64 {
    let r0 = cg.steps[0].r_norm;
    let mut prod = 1.0;
    let mut worst = 0.0f64;
    for step in &cg.steps[1..] {
        let Some(beta) = step.beta else { break };
        prod *= beta;
        let target = (step.r_norm / r0).powi(2);
        if target > 0.0 {
            worst = worst.max((prod - target).abs() / target);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cg::cg_solve;
    use crate::linalg::vector::relative_distance;
    use crate::linalg::{random_spd, random_vector};
    use approx::assert_abs_diff_eq;

    fn diag13() -> SpdMatrix {
        SpdMatrix::from_diagonal(&[1.0, 3.0]).unwrap()
    }

    #[test]
    fn process_identity_breaks_down_immediately() {
        let d = lanczos_process(&SpdMatrix::identity(3), &[1.0, 2.0, 2.0], 3, false).unwrap();
        assert_eq!(d.t.diag(), &[1.0]);
        assert_eq!(d.breakdown_at, Some(1));
        assert_eq!(d.tau0, 3.0);
    }

    #[test]
    fn process_hand_case() {
        let d = lanczos_process(&diag13(), &[1.0, 1.0], 2, false).unwrap();
        assert_abs_diff_eq!(d.t.diag()[0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.t.off()[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.t.diag()[1], 2.0, epsilon = 1e-15);
        // The same numbers from CG: σ₀ = 1/α₀, τ₁ = √β₀/α₀, σ₁ = 1/α₁ + β₀/α₀.
        let (a0, a1, b0): (f64, f64, f64) = (0.5, 2.0 / 3.0, 0.25);
        assert_abs_diff_eq!(d.t.diag()[0], 1.0 / a0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.t.off()[0], b0.sqrt() / a0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.t.diag()[1], 1.0 / a1 + b0 / a0, epsilon = 1e-15);
    }

    #[test]
    fn process_rejects_zero_start() {
        assert_eq!(lanczos_process(&diag13(), &[0.0, 0.0], 2, false), Err(Error::EmptyStart));
    }

    #[test]
    fn process_random_columns_orthonormal() {
        let a = random_spd(10, 100.0, 5).unwrap();
        let d = lanczos_process(&a, &random_vector(10, 5), 10, false).unwrap();
        assert_eq!(d.steps(), 10);
        let (off, unit) = d.orthogonality();
        assert!(off <= 1e-7 && unit <= 1e-10, "{off} {unit}");
        assert!(d.three_term_residual(&a) <= 1e-8 * a.max_abs());
    }

    #[test]
    fn reorthogonalization_keeps_large_runs_orthogonal() {
        let a = random_spd(50, 1e4, 2).unwrap();
        let d = lanczos_process(&a, &random_vector(50, 2), 50, true).unwrap();
        let (off, _) = d.orthogonality();
        assert!(off <= 1e-10, "{off}");
        assert!(d.three_term_residual(&a) <= 1e-8 * a.max_abs());
    }

    #[test]
    fn solve_identity_one_step() {
        let t = lanczos_cholesky_solve(&SpdMatrix::identity(2), &[1.0, 2.0], &[0.0; 2], &SolveOptions::default()).unwrap();
        assert_eq!(t.iterations(), 1);
        assert!(norm(&sub(t.final_x(), &[1.0, 2.0])) <= 1e-15);
    }

    #[test]
    fn solve_hand_case() {
        let t = lanczos_cholesky_solve(&diag13(), &[1.0, 1.0], &[0.0; 2], &SolveOptions::default()).unwrap();
        assert_eq!(t.iterations(), 2);
        assert_abs_diff_eq!(t.x_bar[1][0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t.x_bar[2][0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(t.x_bar[2][1], 1.0 / 3.0, epsilon = 1e-14);
        assert_eq!(t.factors.diag().len(), 2);
        assert_abs_diff_eq!(t.factors.diag()[0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.factors.diag()[1], 1.5, epsilon = 1e-14);
    }

    #[test]
    fn solve_from_exact_solution_is_immediate() {
        let a = diag13();
        let x = a.solve(&[1.0, 1.0]).unwrap();
        let t = lanczos_cholesky_solve(&a, &a.matvec(&x), &x, &SolveOptions::default()).unwrap();
        assert_eq!(t.iterations(), 0);
        assert!(t.converged);
    }

    #[test]
    fn accumulation_leaves_prefix_untouched() {
        let a = random_spd(12, 100.0, 7).unwrap();
        let b = random_vector(12, 7);
        let mut solver = LanczosCholeskySolver::new(&a, &b, &[0.0; 12]).unwrap();
        let mut prev = solver.snapshot();
        while !solver.is_exhausted() && solver.residual_estimate() > 1e-10 * norm(&b) {
            solver.step().unwrap();
            let now = solver.snapshot();
            let k = prev.w.len();
            assert_eq!(&now.factors.diag()[..k], prev.factors.diag());
            for i in 1..k {
                assert_eq!(now.factors.l(i, i - 1).to_bits(), prev.factors.l(i, i - 1).to_bits());
            }
            assert_eq!(&now.w_bar[..k], &prev.w_bar[..]);
            assert_eq!(&now.w[..k], &prev.w[..]);
            assert_eq!(now.w.len(), k + 1);
            prev = now;
        }
        let x_star = a.solve(&b).unwrap();
        assert!(relative_distance(&x_star, solver.x_bar()) <= 1e-8);
    }

    #[test]
    fn solve_directions_conjugate_with_pivot_energies() {
        let a = random_spd(12, 100.0, 3).unwrap();
        let t = lanczos_cholesky_solve(&a, &random_vector(12, 3), &[0.0; 12], &SolveOptions::default()).unwrap();
        let (off, diag) = t.conjugacy(&a);
        assert!(off <= 1e-8 && diag <= 1e-8, "{off} {diag}");
    }

    #[test]
    fn correspondence_hand_case() {
        let opts = SolveOptions::default();
        let cg = cg_solve(&diag13(), &[1.0, 1.0], &[0.0; 2], &opts).unwrap();
        let lz = lanczos_cholesky_solve(&diag13(), &[1.0, 1.0], &[0.0; 2], &opts).unwrap();
        assert_abs_diff_eq!(lz.factors.l(1, 0), 0.5f64.sqrt() / 2f64.sqrt(), epsilon = 1e-15);
        let v1 = &lz.data.v[1];
        let r1 = &cg.steps[1].r;
        assert_abs_diff_eq!(v1[0], -r1[0] / norm(r1), epsilon = 1e-15);
        let summary = correspondence_summary(&verify_correspondence(&cg, &lz).unwrap());
        assert!(summary.values().all(|d| *d <= 1e-14), "{summary:?}");
    }

    #[test]
    fn correspondence_identity_matrix() {
        let opts = SolveOptions::default();
        let id = SpdMatrix::identity(3);
        let b = [1.0, -1.0, 2.0];
        let cg = cg_solve(&id, &b, &[0.0; 3], &opts).unwrap();
        let lz = lanczos_cholesky_solve(&id, &b, &[0.0; 3], &opts).unwrap();
        let rows = verify_correspondence(&cg, &lz).unwrap();
        // Exact up to the rounding in normalizing r₀.
        assert!(rows.iter().all(|r| r.k == 0 && r.deviation <= 1e-15), "{rows:?}");
    }

    #[test]
    fn correspondence_random() {
        let opts = SolveOptions::default();
        for seed in 0..3 {
            let a = random_spd(20, 100.0, seed).unwrap();
            let b = random_vector(20, seed);
            let cg = cg_solve(&a, &b, &[0.0; 20], &opts).unwrap();
            let lz = lanczos_cholesky_solve(&a, &b, &[0.0; 20], &opts).unwrap();
            let summary = correspondence_summary(&verify_correspondence(&cg, &lz).unwrap());
            assert!(summary.values().all(|d| *d <= 1e-6), "seed {seed}: {summary:?}");
            for (x, y) in cg.iterates().iter().zip(&lz.x_bar) {
                assert!(relative_distance(x, y) <= 1e-7);
            }
        }
    }

    #[test]
    fn correspondence_rejects_mismatched_runs() {
        let opts = SolveOptions::default();
        let cg = cg_solve(&diag13(), &[1.0, 1.0], &[0.0; 2], &opts).unwrap();
        let lz = lanczos_cholesky_solve(&diag13(), &[1.0, 1.0], &[1.0, 0.0], &opts).unwrap();
        assert!(verify_correspondence(&cg, &lz).is_err());
    }

    #[test]
    fn determinant_examples() {
        let opts = SolveOptions::default();
        let cg = cg_solve(&diag13(), &[1.0, 1.0], &[0.0; 2], &opts).unwrap();
        let d = determinant_identity(&cg, &diag13()).unwrap();
        assert_abs_diff_eq!(d.prod_inv_alpha, 3.0, epsilon = 1e-14);
        assert_eq!(d.det_oracle, 3.0);

        let id = SpdMatrix::identity(3);
        let cg = cg_solve(&id, &[1.0, 2.0, 3.0], &[0.0; 3], &opts).unwrap();
        assert!(matches!(determinant_identity(&cg, &id), Err(Error::NotApplicable(_))));

        let a = random_spd(8, 50.0, 11).unwrap();
        let cg = cg_solve(&a, &random_vector(8, 11), &[0.0; 8], &SolveOptions::with_tol(1e-14)).unwrap();
        assert!(determinant_identity(&cg, &a).unwrap().rel_dev <= 1e-6);
    }

    #[test]
    fn beta_product_examples() {
        let opts = SolveOptions::default();
        let cg = cg_solve(&SpdMatrix::identity(2), &[1.0, 2.0], &[0.0; 2], &opts).unwrap();
        assert_eq!(beta_product_identity(&cg), 0.0);

        let cg = cg_solve(&diag13(), &[1.0, 1.0], &[0.0; 2], &opts).unwrap();
        assert_abs_diff_eq!(cg.betas()[0], 0.5 / 2.0, epsilon = 1e-15);
        let a = random_spd(25, 100.0, 4).unwrap();
        let cg = cg_solve(&a, &random_vector(25, 4), &[0.0; 25], &opts).unwrap();
        assert!(beta_product_identity(&cg) <= 1e-10);
    }
}
