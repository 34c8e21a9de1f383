//! Convergence-rate instrumentation: steepest descent, two-term and k-term
//! error ratios, the Kantorovich factor (closed form and brute force), the
//! three-eigenvalue lemma behind it, and the CG ratio table.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::cg::{cg_solve, SolveOptions};
use crate::error::{check_dim, Error, Result};
use crate::linalg::vector::{axpy, dot, norm, scaled, sub};
use crate::linalg::{a_norm, sym_eigen, SpdMatrix};

/// One steepest-descent iterate; `alpha` is `None` on the final step.
#[derive(Debug, Clone, PartialEq)]
pub struct SdStep {
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdTrace {
    pub steps: Vec<SdStep>,
    /// `‖x_k − x*‖_A` for every step, against a direct solve.
    pub a_norm_errors: Vec<f64>,
    pub converged: bool,
}

impl SdTrace {
    pub fn iterations(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn final_x(&self) -> &[f64] {
        &self.steps.last().expect("trace holds the initial step").x
    }
}

/// Steepest descent with exact line search: `x_{k+1} = x_k + (r_kᵀr_k / r_kᵀAr_k)·r_k`.
pub fn steepest_descent_solve(a: &SpdMatrix, b: &[f64], x0: &[f64], opts: &SolveOptions) -> Result<SdTrace> {
    let n = a.order();
    check_dim(n, b.len())?;
    check_dim(n, x0.len())?;
    opts.validate()?;
    let max_iter = opts.max_iter_for(n);
    let x_star = a.solve(b)?;
    let threshold = opts.rel_tol * norm(b);

    let mut x = x0.to_vec();
    let mut r = sub(b, &a.matvec(&x));
    let mut steps = Vec::new();
    let mut converged = false;
    for k in 0..=max_iter {
        if norm(&r) <= threshold {
            converged = true;
        }
        if converged || k == max_iter {
            steps.push(SdStep { x, r, alpha: None });
            break;
        }
        let ar = a.matvec(&r);
        let curvature = dot(&r, &ar);
        if !(curvature > 0.0) {
            return Err(Error::Breakdown { step: k, value: curvature });
        }
        let alpha = dot(&r, &r) / curvature;
        let mut x_next = x.clone();
        axpy(alpha, &r, &mut x_next);
        let mut r_next = r.clone();
        axpy(-alpha, &ar, &mut r_next);
        steps.push(SdStep { x, r, alpha: Some(alpha) });
        x = x_next;
        r = r_next;
    }
    let a_norm_errors = steps.iter().map(|s| a_norm(a, &sub(&s.x, &x_star))).collect::<Result<_>>()?;
    Ok(SdTrace { steps, a_norm_errors, converged })
}

/// Predicted `‖e_{k+1}‖²_A / ‖e_k‖²_A = 1 − (rᵀd)² / (dᵀAd · rᵀA⁻¹r)` after an
/// exact line search from residual `r` along `d`.
pub fn predicted_error_ratio_sq(a: &SpdMatrix, r: &[f64], d: &[f64]) -> Result<f64> {
    check_dim(a.order(), r.len())?;
    check_dim(a.order(), d.len())?;
    let dad = a.inner(d, d);
    let r_ainv_r = dot(r, &a.solve(r)?);
    if !(dad > 0.0) || !(r_ainv_r > 0.0) {
        return Err(Error::DegenerateDirection);
    }
    Ok(1.0 - dot(r, d).powi(2) / (dad * r_ainv_r))
}

fn check_errors(errors: &[f64]) -> Result<()> {
    if errors.is_empty() {
        return Err(Error::InvalidInput("error sequence is empty".into()));
    }
    match errors.iter().find(|e| !(**e > 0.0)) {
        Some(e) => Err(Error::InvalidInput(format!("error {e} is not positive; drop the converged tail"))),
        None => Ok(()),
    }
}

/// `e_k / e_{k-1}` for `k ≥ 1`.
pub fn two_term_ratios(errors: &[f64]) -> Result<Vec<f64>> {
    check_errors(errors)?;
    Ok(errors.windows(2).map(|w| w[1] / w[0]).collect())
}

/// `(e_k / e₀)^{1/k}`.
pub fn k_term_mean(errors: &[f64], k: usize) -> Result<f64> {
    check_errors(errors)?;
    if k == 0 || k >= errors.len() {
        return Err(Error::InvalidInput(format!("k = {k} outside 1..{}", errors.len())));
    }
    Ok((errors[k] / errors[0]).powf(1.0 / k as f64))
}

fn check_spectrum_bounds(lambda_min: f64, lambda_max: f64) -> Result<()> {
    if !(lambda_min > 0.0) || !(lambda_max >= lambda_min) {
        return Err(Error::InvalidInput(format!("need 0 < λ_min ≤ λ_max, got {lambda_min}, {lambda_max}")));
    }
    Ok(())
}

/// `(λ_n − λ₁)/(λ_n + λ₁)`: the worst one-step A-norm contraction of
/// steepest descent and the supremum of CG's two-term ratio.
pub fn kantorovich_factor(lambda_min: f64, lambda_max: f64) -> Result<f64> {
    check_spectrum_bounds(lambda_min, lambda_max)?;
    Ok((lambda_max - lambda_min) / (lambda_max + lambda_min))
}

/// `(√λ_n − √λ₁)/(√λ_n + √λ₁)`, the factor of the textbook k-step estimate.
pub fn sqrt_kantorovich_factor(lambda_min: f64, lambda_max: f64) -> Result<f64> {
    check_spectrum_bounds(lambda_min, lambda_max)?;
    let (lo, hi) = (lambda_min.sqrt(), lambda_max.sqrt());
    Ok((hi - lo) / (hi + lo))
}

/// `(Σλ_it_i)(Σt_i/λ_i)`.
fn harmonic_product(lambdas: &[f64], t: &[f64]) -> f64 {
    let mean: f64 = lambdas.iter().zip(t).map(|(l, w)| l * w).sum();
    let inv_mean: f64 = lambdas.iter().zip(t).map(|(l, w)| w / l).sum();
    mean * inv_mean
}

/// Largest matrix order for which the simplex grid search is run.
pub const GRID_MAX_ORDER: usize = 4;

/// Result of maximizing `(Σλ_it_i)(Σt_i/λ_i)` over the probability simplex.
/// Weights are indexed like the ascending eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct KantorovichSearch {
    pub eigenvalues: Vec<f64>,
    pub pair_max: f64,
    pub pair_weights: Vec<f64>,
    /// Only for orders up to [`GRID_MAX_ORDER`].
    pub grid: Option<(f64, Vec<f64>)>,
}

impl KantorovichSearch {
    /// The larger of the two searches and its weights.
    pub fn best(&self) -> (f64, &[f64]) {
        match &self.grid {
            Some((g, w)) if *g > self.pair_max => (*g, w),
            _ => (self.pair_max, &self.pair_weights),
        }
    }
}

/// Brute-force maximization of the harmonic product: every pair of
/// eigenvalues with equal weights, and for small orders an exhaustive grid of
/// step `1/resolution` over the simplex as an independent check.
pub fn kantorovich_brute(a: &SpdMatrix, resolution: usize) -> Result<KantorovichSearch> {
    if resolution < 2 {
        return Err(Error::InvalidInput("grid resolution must be at least 2".into()));
    }
    let lambdas = sym_eigen(a.sym()).values;
    let n = lambdas.len();

    let mut pair_max = 1.0;
    let mut pair_weights = vec![0.0; n];
    pair_weights[0] = 1.0;
    for i in 0..n {
        for j in i + 1..n {
            let mut t = vec![0.0; n];
            t[i] = 0.5;
            t[j] = 0.5;
            let value = harmonic_product(&lambdas, &t);
            if value > pair_max {
                pair_max = value;
                pair_weights = t;
            }
        }
    }

    let grid = (n <= GRID_MAX_ORDER).then(|| grid_search(&lambdas, resolution));
    Ok(KantorovichSearch { eigenvalues: lambdas, pair_max, pair_weights, grid })
}

fn grid_search(lambdas: &[f64], resolution: usize) -> (f64, Vec<f64>) {
    fn walk(lambdas: &[f64], res: usize, counts: &mut Vec<usize>, left: usize, best: &mut (f64, Vec<f64>)) {
        if counts.len() + 1 == lambdas.len() {
            counts.push(left);
            let t: Vec<f64> = counts.iter().map(|c| *c as f64 / res as f64).collect();
            let value = harmonic_product(lambdas, &t);
            if value > best.0 {
                *best = (value, t);
            }
            counts.pop();
            return;
        }
        for c in 0..=left {
            counts.push(c);
            walk(lambdas, res, counts, left - c, best);
            counts.pop();
        }
    }
    let mut best = (f64::NEG_INFINITY, Vec::new());
    walk(lambdas, resolution, &mut Vec::with_capacity(lambdas.len()), resolution, &mut best);
    best
}

/// Outcome of the three-eigenvalue inequalities for `0 < λ₁ < λ₂ < λ₃`, with
/// `c_ij = (√(λ_j/λ_i) − √(λ_i/λ_j))²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaCheck {
    /// `√c₁₂ + √c₂₃ < √c₁₃`
    pub sqrt_holds: bool,
    /// `c₁₂ + c₂₃ < c₁₃`
    pub plain_holds: bool,
    pub c12: f64,
    pub c23: f64,
    pub c13: f64,
}

/// `c_ij` in the cancellation-free form `(λ_j − λ_i)² / (λ_iλ_j)`.
fn lemma_c(li: f64, lj: f64) -> f64 {
    (lj - li).powi(2) / (li * lj)
}

pub fn lemma_c_inequality(l1: f64, l2: f64, l3: f64) -> Result<LemmaCheck> {
    if !(0.0 < l1 && l1 < l2 && l2 < l3) {
        return Err(Error::InvalidInput(format!("need 0 < λ₁ < λ₂ < λ₃, got {l1}, {l2}, {l3}")));
    }
    let (c12, c23, c13) = (lemma_c(l1, l2), lemma_c(l2, l3), lemma_c(l1, l3));
    Ok(LemmaCheck {
        sqrt_holds: c12.sqrt() + c23.sqrt() < c13.sqrt(),
        plain_holds: c12 + c23 < c13,
        c12,
        c23,
        c13,
    })
}

fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Violation counts of [`lemma_c_inequality`] over random triples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LemmaSweep {
    pub trials: usize,
    pub sqrt_violations: usize,
    pub plain_violations: usize,
}

/// Samples `trials` triples log-uniformly in `(lo, hi)`, sorted, and counts
/// violations of both inequalities. Triples with a repeated value are redrawn.
pub fn lemma_sweep(trials: usize, lo: f64, hi: f64, seed: u64) -> Result<LemmaSweep> {
    if !(0.0 < lo && lo < hi) {
        return Err(Error::InvalidInput(format!("need 0 < lo < hi, got {lo}, {hi}")));
    }
    let (log_lo, log_hi) = (lo.ln(), hi.ln());
    let checks = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            loop {
                let mut l: [f64; 3] = std::array::from_fn(|_| rng.random_range(log_lo..log_hi).exp());
                l.sort_by(f64::total_cmp);
                if let Ok(check) = lemma_c_inequality(l[0], l[1], l[2]) {
                    return check;
                }
            }
        })
        .collect::<Vec<_>>();
    Ok(LemmaSweep {
        trials,
        sqrt_violations: checks.iter().filter(|c| !c.sqrt_holds).count(),
        plain_violations: checks.iter().filter(|c| !c.plain_holds).count(),
    })
}

/// One-step A-norm error ratio of steepest descent from a residual along `v`:
/// `√(1 − (vᵀv)² / (vᵀAv · vᵀA⁻¹v))`.
pub fn sd_one_step_ratio(a: &SpdMatrix, v: &[f64]) -> Result<f64> {
    Ok(predicted_error_ratio_sq(a, v, v)?.max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdWorstCase {
    /// Ratio at `(φ₁ + φ_n)/√2`.
    pub analytic: f64,
    /// Largest ratio over the random unit directions.
    pub sampled: f64,
}

impl SdWorstCase {
    pub fn max(&self) -> f64 {
        self.analytic.max(self.sampled)
    }
}

/// Maximizes the steepest-descent one-step ratio over `trials` random unit
/// residual directions (Gaussian, normalized; trial `i` is seeded from
/// `(seed, i)`) and over the analytic worst case `(φ₁ + φ_n)/√2`.
pub fn sd_worst_case_ratio(a: &SpdMatrix, trials: usize, seed: u64) -> Result<SdWorstCase> {
    if trials == 0 {
        return Err(Error::InvalidInput("need at least one trial".into()));
    }
    let n = a.order();
    let eig = sym_eigen(a.sym());
    let mut v: Vec<f64> = eig.vectors[0].iter().zip(&eig.vectors[n - 1]).map(|(p, q)| p + q).collect();
    if n == 1 {
        v = eig.vectors[0].clone();
    }
    let v = scaled(1.0 / norm(&v), &v);
    let analytic = sd_one_step_ratio(a, &v)?;

    let sampled = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            sd_one_step_ratio(a, &scaled(1.0 / norm(&g), &g))
        })
        .try_reduce(|| 0.0, |x, y| Ok(x.max(y)))?;
    Ok(SdWorstCase { analytic, sampled })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRow {
    pub k: usize,
    /// `‖x_k − x*‖_A`
    pub a_norm_error: f64,
    /// `e_k / e_{k-1}`
    pub ratio2: f64,
    /// `(e_k / e₀)^{1/k}`
    pub ratio_k: f64,
    /// `2·q^k·e₀` with `q` the square-root factor.
    pub textbook_bound_rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioTable {
    pub rows: Vec<RatioRow>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `(λ_n − λ₁)/(λ_n + λ₁)`
    pub q_bound: f64,
    /// `(√λ_n − √λ₁)/(√λ_n + √λ₁)`
    pub sqrt_q_bound: f64,
    pub initial_error: f64,
}

impl RatioTable {
    /// Rows whose two-term ratio exceeds `q_bound + tol`.
    pub fn two_term_violations(&self, tol: f64) -> Vec<&RatioRow> {
        self.rows.iter().filter(|r| r.ratio2 > self.q_bound + tol).collect()
    }

    /// Rows whose error exceeds the textbook estimate (relative slack `tol`).
    pub fn textbook_violations(&self, tol: f64) -> Vec<&RatioRow> {
        self.rows.iter().filter(|r| r.a_norm_error > r.textbook_bound_rhs * (1.0 + tol)).collect()
    }

    /// Rows where an individual two-term ratio is strictly larger than the
    /// k-term mean at the same step.
    pub fn ratio2_above_mean(&self) -> Vec<&RatioRow> {
        self.rows.iter().filter(|r| r.ratio2 > r.ratio_k).collect()
    }
}

/// Runs CG and tabulates two-term and k-term A-norm error ratios against a
/// direct solve, together with the spectral bounds.
pub fn cg_ratio_table(a: &SpdMatrix, b: &[f64], x0: &[f64], opts: &SolveOptions) -> Result<RatioTable> {
    let trace = cg_solve(a, b, x0, opts)?;
    let x_star = a.solve(b)?;
    let lambdas = sym_eigen(a.sym()).values;
    let (lambda_min, lambda_max) = (lambdas[0], lambdas[lambdas.len() - 1]);
    let q_bound = kantorovich_factor(lambda_min, lambda_max)?;
    let sqrt_q_bound = sqrt_kantorovich_factor(lambda_min, lambda_max)?;

    let errors: Vec<f64> = trace.iterates().iter().map(|x| a_norm(a, &sub(x, &x_star))).collect::<Result<_>>()?;
    let e0 = errors[0];
    let rows = (1..errors.len())
        .map(|k| RatioRow {
            k,
            a_norm_error: errors[k],
            ratio2: if errors[k - 1] > 0.0 { errors[k] / errors[k - 1] } else { 0.0 },
            ratio_k: if e0 > 0.0 { (errors[k] / e0).powf(1.0 / k as f64) } else { 0.0 },
            textbook_bound_rhs: 2.0 * sqrt_q_bound.powi(k as i32) * e0,
        })
        .collect();
    Ok(RatioTable { rows, lambda_min, lambda_max, q_bound, sqrt_q_bound, initial_error: e0 })
}
