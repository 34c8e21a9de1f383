//! Piecewise-linear finite elements for `−u'' + c·u = f` on (0,1) with
//! homogeneous Dirichlet ends, preconditioned CG with the discrete Riesz map
//! `R = (K+M)⁻¹`, and CG written directly on the discrete operator equation
//! (dual pairings and Riesz applications on coefficient vectors).

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::cg::{SolveOptions, RESIDUAL_REFRESH};
use crate::error::{check_dim, Error, Result};
use crate::linalg::vector::{axpy, dot, norm, relative_gap, sub};
use crate::linalg::{LdlFactors, LinearOperator, Tridiag};

/// Gauss–Legendre nodes and weights on [−1, 1], exact to degree 5.
const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Uniform-mesh system `A = K + c·M` on `n` interior nodes of (0,1).
#[derive(Debug, Clone, PartialEq)]
pub struct FemSystem {
    n: usize,
    h: f64,
    c: f64,
    stiffness: Tridiag,
    mass: Tridiag,
    system: Tridiag,
    riesz: LdlFactors,
}

impl FemSystem {
    pub fn n_interior(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn stiffness(&self) -> &Tridiag {
        &self.stiffness
    }

    pub fn mass(&self) -> &Tridiag {
        &self.mass
    }

    /// `A = K + c·M`.
    pub fn system(&self) -> &Tridiag {
        &self.system
    }

    /// LDLᵀ factors of `K + M`, the Gram matrix of the H¹ inner product.
    pub fn riesz_factors(&self) -> &LdlFactors {
        &self.riesz
    }

    /// Interior node coordinates `x_i = i·h`, `i = 1..n`.
    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.n).map(|i| i as f64 * self.h).collect()
    }

    /// Applies `f` on every element `[x_j, x_{j+1}]`, `j = 0..n`, with the
    /// three Gauss points mapped into it.
    fn element_quadrature(&self, mut f: impl FnMut(usize, f64, f64)) {
        for j in 0..=self.n {
            let left = j as f64 * self.h;
            for (xi, w) in GAUSS3 {
                let x = left + 0.5 * self.h * (xi + 1.0);
                f(j, x, 0.5 * self.h * w);
            }
        }
    }
}

/// Assembles stiffness and mass matrices of hat functions on a uniform mesh:
/// `K = (1/h)·tridiag(−1, 2, −1)`, `M = (h/6)·tridiag(1, 4, 1)`.
pub fn assemble_1d(n_interior: usize, c: f64) -> Result<FemSystem> {
    if n_interior < 1 {
        return Err(Error::InvalidInput("need at least one interior node".into()));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::InvalidInput(format!("reaction coefficient must be finite and ≥ 0, got {c}")));
    }
    let n = n_interior;
    let h = 1.0 / (n + 1) as f64;
    let stiffness = Tridiag::new(vec![2.0 / h; n], vec![-1.0 / h; n - 1])?;
    let mass = Tridiag::new(vec![4.0 * h / 6.0; n], vec![h / 6.0; n - 1])?;
    let system = stiffness.add_scaled(&mass, c)?;
    let riesz = stiffness.add_scaled(&mass, 1.0)?.ldlt()?;
    Ok(FemSystem { n, h, c, stiffness, mass, system, riesz })
}

/// `F_i = ∫ f·φ_i` by three-point Gauss quadrature on each element.
pub fn load_vector(f: impl Fn(f64) -> f64, sys: &FemSystem) -> Vec<f64> {
    let n = sys.n;
    let h = sys.h;
    let mut load = vec![0.0; n];
    sys.element_quadrature(|j, x, w| {
        let fx = f(x) * w;
        let left = j as f64 * h;
        let t = (x - left) / h;
        // Node j sits at the element's left end (hat falls as 1 − t), node
        // j+1 at its right end (hat rises as t); nodes 0 and n+1 are Dirichlet.
        if j >= 1 {
            load[j - 1] += fx * (1.0 - t);
        }
        if j < n {
            load[j] += fx * t;
        }
    });
    load
}

/// Built-in right-hand sides with known exact solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Load {
    /// `f ≡ 1`.
    Const1,
    /// `f = (π² + c)·sin(πx)`, exact solution `sin(πx)` for every `c`.
    SinBenchmark,
}

impl Load {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "const1" => Ok(Self::Const1),
            "sin-benchmark" => Ok(Self::SinBenchmark),
            other => Err(Error::InvalidInput(format!("unknown load {other:?}; expected const1 or sin-benchmark"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Const1 => "const1",
            Self::SinBenchmark => "sin-benchmark",
        }
    }

    pub fn source(self, c: f64) -> impl Fn(f64) -> f64 {
        move |x| match self {
            Self::Const1 => 1.0,
            Self::SinBenchmark => (PI * PI + c) * (PI * x).sin(),
        }
    }

    /// Exact solution of `−u'' + c·u = f`, `u(0) = u(1) = 0`.
    pub fn exact(self, c: f64) -> impl Fn(f64) -> f64 {
        move |x| match self {
            Self::SinBenchmark => (PI * x).sin(),
            Self::Const1 if c == 0.0 => 0.5 * x * (1.0 - x),
            Self::Const1 => {
                let s = c.sqrt();
                (1.0 - (s * (x - 0.5)).cosh() / (0.5 * s).cosh()) / c
            }
        }
    }
}

/// `(K + M)⁻¹·r`: the representation of the discrete Riesz map.
pub fn riesz_apply(sys: &FemSystem, r: &[f64]) -> Result<Vec<f64>> {
    check_dim(sys.n, r.len())?;
    sys.riesz.solve(r)
}

/// One PCG (or operator-form CG) iterate. `z = R·r`. `alpha` and `p` are
/// absent on the final step; `beta` is `β_{k-1}`, the coefficient that built
/// `p_k` (absent at `k = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct PcgStep {
    pub k: usize,
    pub u: Vec<f64>,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub p: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub r_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcgTrace {
    pub steps: Vec<PcgStep>,
    pub converged: bool,
}

impl PcgTrace {
    pub fn iterations(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn final_u(&self) -> &[f64] {
        &self.steps.last().expect("trace holds the initial step").u
    }

    /// Worst `|r_iᵀz_j| / √(r_iᵀz_i · r_jᵀz_j)` over `i ≠ j`, taken over
    /// the residuals still above [`RESOLVED_FRACTION`] of the initial one in
    /// the `R`-norm. The recursive residual carries an absolute error of
    /// order `ε·‖r₀‖`, so below that fraction the normalized products
    /// measure rounding rather than orthogonality.
    pub fn preconditioned_orthogonality(&self) -> f64 {
        let r0z0 = dot(&self.steps[0].r, &self.steps[0].z);
        let floor = RESOLVED_FRACTION * RESOLVED_FRACTION * r0z0;
        let live: Vec<&PcgStep> = self.steps.iter().filter(|s| dot(&s.r, &s.z) >= floor).collect();
        let mut worst = 0.0f64;
        for (i, si) in live.iter().enumerate() {
            for sj in &live[..i] {
                let scale = (dot(&si.r, &si.z) * dot(&sj.r, &sj.z)).sqrt();
                worst = worst.max(dot(&si.r, &sj.z).abs() / scale);
            }
        }
        worst
    }
}

/// Fraction of the initial residual below which per-step normalized
/// diagnostics are dominated by rounding.
pub const RESOLVED_FRACTION: f64 = 1e-6;

/// How PCG forms the coefficient of the previous direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BetaRule {
    /// `β_{k-1} = −p_{k-1}ᵀA·z_k / p_{k-1}ᵀA·p_{k-1}`, explicit conjugation.
    #[default]
    Conjugation,
    /// `β_{k-1} = r_kᵀz_k / r_{k-1}ᵀz_{k-1}`. With the identity
    /// preconditioner this performs exactly the operations of `cg_solve`.
    ResidualRatio,
}

/// Preconditioned CG for `A·U = F`: `z = R·r`, `α = rᵀz / pᵀAp`,
/// `p = z + β·p`. The preconditioner must be symmetric positive definite;
/// that is not checked.
pub fn pcg_solve<A, P>(a: &A, f: &[f64], precond: P, u0: &[f64], opts: &SolveOptions, rule: BetaRule) -> Result<PcgTrace>
where
    A: LinearOperator + ?Sized,
    P: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = a.dim();
    check_dim(n, f.len())?;
    check_dim(n, u0.len())?;
    opts.validate()?;
    let max_iter = opts.max_iter_for(n);
    let threshold = opts.rel_tol * norm(f);

    let mut u = u0.to_vec();
    let mut r = sub(f, &a.apply(&u));
    let mut z = precond(&r)?;
    check_dim(n, z.len())?;
    let mut rz = dot(&r, &z);
    let mut p: Vec<f64> = Vec::new();
    let mut beta_prev: Option<f64> = None;
    let mut steps = Vec::new();

    for k in 0.. {
        let r_norm = norm(&r);
        if r_norm <= threshold || k == max_iter {
            let converged = r_norm <= threshold;
            steps.push(PcgStep { k, u, r, z, p: None, alpha: None, beta: beta_prev, r_norm });
            log::debug!("pcg: stopped at k={k}, ‖r‖={r_norm:e}, converged={converged}");
            return Ok(PcgTrace { steps, converged });
        }
        if k == 0 {
            p = z.clone();
        } else {
            let beta = beta_prev.expect("beta set after first step");
            for (pi, zi) in p.iter_mut().zip(&z) {
                *pi = zi + beta * *pi;
            }
        }
        let ap = a.apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Breakdown { step: k, value: pap });
        }
        let alpha = rz / pap;
        steps.push(PcgStep {
            k,
            u: u.clone(),
            r: r.clone(),
            z: z.clone(),
            p: Some(p.clone()),
            alpha: Some(alpha),
            beta: beta_prev,
            r_norm,
        });

        axpy(alpha, &p, &mut u);
        if (k + 1) % RESIDUAL_REFRESH == 0 {
            r = sub(f, &a.apply(&u));
        } else {
            axpy(-alpha, &ap, &mut r);
        }
        z = precond(&r)?;
        let rz_next = dot(&r, &z);
        beta_prev = Some(match rule {
            BetaRule::ResidualRatio => rz_next / rz,
            BetaRule::Conjugation => -dot(&ap, &z) / pap,
        });
        rz = rz_next;
    }
    unreachable!()
}

/// CG on the discrete operator equation `L_h u_h = f_h`, carried out on
/// coefficient vectors: dual pairings `⟨r_h, v_h⟩` become `rᵀv`, the Riesz
/// map becomes `riesz`, and
/// `p_k = R·r_k + β_{k-1}·p_{k-1}`, `β_{k-1} = −⟨L p_{k-1}, R r_k⟩ / ⟨L p_{k-1}, p_{k-1}⟩`,
/// `α_k = ⟨r_k, p_k⟩ / ⟨L p_k, p_k⟩`.
pub fn operator_cg_with_riesz<A, P>(a: &A, f: &[f64], riesz: P, u0: &[f64], opts: &SolveOptions) -> Result<PcgTrace>
where
    A: LinearOperator + ?Sized,
    P: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = a.dim();
    check_dim(n, f.len())?;
    check_dim(n, u0.len())?;
    opts.validate()?;
    let max_iter = opts.max_iter_for(n);
    let threshold = opts.rel_tol * norm(f);

    let mut u = u0.to_vec();
    let mut r = sub(f, &a.apply(&u));
    let mut p: Vec<f64> = Vec::new();
    let mut lp: Vec<f64> = Vec::new();
    let mut beta_prev: Option<f64> = None;
    let mut steps = Vec::new();

    for k in 0.. {
        let rr = riesz(&r)?;
        check_dim(n, rr.len())?;
        let r_norm = norm(&r);
        if k > 0 {
            let beta = -dot(&lp, &rr) / dot(&lp, &p);
            beta_prev = Some(beta);
        }
        if r_norm <= threshold || k == max_iter {
            let converged = r_norm <= threshold;
            steps.push(PcgStep { k, u, r, z: rr, p: None, alpha: None, beta: beta_prev, r_norm });
            return Ok(PcgTrace { steps, converged });
        }
        p = match beta_prev {
            None => rr.clone(),
            Some(beta) => rr.iter().zip(&p).map(|(z, q)| z + beta * q).collect(),
        };
        lp = a.apply(&p);
        let lpp = dot(&lp, &p);
        if !(lpp > 0.0) {
            return Err(Error::Breakdown { step: k, value: lpp });
        }
        let alpha = dot(&r, &p) / lpp;
        steps.push(PcgStep {
            k,
            u: u.clone(),
            r: r.clone(),
            z: rr,
            p: Some(p.clone()),
            alpha: Some(alpha),
            beta: beta_prev,
            r_norm,
        });
        axpy(alpha, &p, &mut u);
        if (k + 1) % RESIDUAL_REFRESH == 0 {
            r = sub(f, &a.apply(&u));
        } else {
            axpy(-alpha, &lp, &mut r);
        }
    }
    unreachable!()
}

/// Operator-form CG for the FEM system with the H¹ Riesz map `(K+M)⁻¹`.
pub fn operator_cg_solve(sys: &FemSystem, f: &[f64], u0: &[f64], opts: &SolveOptions) -> Result<PcgTrace> {
    operator_cg_with_riesz(&sys.system, f, |r| riesz_apply(sys, r), u0, opts)
}

/// PCG for the FEM system preconditioned by its Riesz map.
pub fn pcg_riesz_solve(sys: &FemSystem, f: &[f64], u0: &[f64], opts: &SolveOptions) -> Result<PcgTrace> {
    pcg_solve(&sys.system, f, |r| riesz_apply(sys, r), u0, opts, BetaRule::Conjugation)
}

/// Worst relative deviation per trace field between two runs of equal length.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceComparison {
    pub u: f64,
    pub r: f64,
    pub z: f64,
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl TraceComparison {
    pub fn max(&self) -> f64 {
        [self.u, self.r, self.z, self.p, self.alpha, self.beta].into_iter().fold(0.0, f64::max)
    }
}

/// Every step is compared. Each field's deviation is measured against that
/// field's largest magnitude over the trace: the two runs differ only by
/// rounding, which is absolute at the scale of the first steps, so dividing
/// by a residual that has already shrunk by ten orders would report the
/// shrinkage, not a disagreement. `α` is compared per step since it does
/// not shrink.
pub fn compare_traces(a: &PcgTrace, b: &PcgTrace) -> Result<TraceComparison> {
    if a.steps.len() != b.steps.len() {
        return Err(Error::InvalidTrace(format!("{} vs {} steps", a.steps.len(), b.steps.len())));
    }
    for (k, (s, t)) in a.steps.iter().zip(&b.steps).enumerate() {
        if s.p.is_some() != t.p.is_some() {
            return Err(Error::InvalidTrace(format!("direction present in only one trace at step {k}")));
        }
    }
    let field = |get: &dyn Fn(&PcgStep) -> Option<&[f64]>| {
        let scale = a.steps.iter().chain(&b.steps).filter_map(get).map(norm).fold(0.0, f64::max);
        let worst = a
            .steps
            .iter()
            .zip(&b.steps)
            .filter_map(|(s, t)| Some(norm(&sub(get(s)?, get(t)?))))
            .fold(0.0, f64::max);
        if worst == 0.0 { 0.0 } else { worst / scale }
    };
    let beta_scale = a.steps.iter().chain(&b.steps).filter_map(|s| s.beta).map(f64::abs).fold(0.0, f64::max);
    let beta_worst = a
        .steps
        .iter()
        .zip(&b.steps)
        .filter_map(|(s, t)| Some((s.beta? - t.beta?).abs()))
        .fold(0.0, f64::max);
    Ok(TraceComparison {
        u: field(&|s| Some(&s.u)),
        r: field(&|s| Some(&s.r)),
        z: field(&|s| Some(&s.z)),
        p: field(&|s| s.p.as_deref()),
        alpha: a
            .steps
            .iter()
            .zip(&b.steps)
            .filter_map(|(s, t)| Some(relative_gap(s.alpha?, t.alpha?)))
            .fold(0.0, f64::max),
        beta: if beta_worst == 0.0 { 0.0 } else { beta_worst / beta_scale },
    })
}

/// The step length by the dual-pairing definition `rᵀp / pᵀAp` next to the
/// form `(R·r)ᵀp / pᵀAp` displayed in the representation table, per step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaForms {
    pub k: usize,
    pub dual_pairing: f64,
    pub displayed: f64,
    pub rel_gap: f64,
}

pub fn alpha_forms(sys: &FemSystem, trace: &PcgTrace) -> Vec<AlphaForms> {
    trace
        .steps
        .iter()
        .filter_map(|s| {
            let p = s.p.as_ref()?;
            let pap = dot(p, &sys.system.matvec(p));
            let dual_pairing = dot(&s.r, p) / pap;
            let displayed = dot(&s.z, p) / pap;
            Some(AlphaForms { k: s.k, dual_pairing, displayed, rel_gap: relative_gap(dual_pairing, displayed) })
        })
        .collect()
}

/// `‖u_h − u‖_{L²}` for the piecewise-linear `u_h` with interior nodal values
/// `u` (zero at both ends), by three-point Gauss quadrature per element.
pub fn l2_error(sys: &FemSystem, u: &[f64], exact: impl Fn(f64) -> f64) -> Result<f64> {
    check_dim(sys.n, u.len())?;
    let node = |i: usize| if i == 0 || i == sys.n + 1 { 0.0 } else { u[i - 1] };
    let mut sum = 0.0;
    sys.element_quadrature(|j, x, w| {
        let t = (x - j as f64 * sys.h) / sys.h;
        let uh = node(j) * (1.0 - t) + node(j + 1) * t;
        sum += w * (uh - exact(x)).powi(2);
    });
    Ok(sum.sqrt())
}

/// One level of a mesh-refinement study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementRow {
    pub n_interior: usize,
    pub h: f64,
    pub iterations: usize,
    pub l2_error: f64,
    /// Error of the previous (coarser) level divided by this one.
    pub ratio: Option<f64>,
}

/// Solves on `levels` dyadic refinements starting at `n_interior` (each level
/// has `2(n+1) − 1` interior nodes) with Riesz-preconditioned CG and reports
/// L² errors against the load's exact solution.
pub fn refinement_study(n_interior: usize, c: f64, load: Load, levels: usize, opts: &SolveOptions) -> Result<Vec<RefinementRow>> {
    let rows = refinement_sizes(n_interior, levels).map(|n| refinement_level(n, c, load, opts)).collect::<Result<Vec<_>>>()?;
    Ok(with_ratios(rows))
}

/// As [`refinement_study`], with the mesh levels solved concurrently; the
/// rows are identical and in the same order.
pub fn refinement_study_par(n_interior: usize, c: f64, load: Load, levels: usize, opts: &SolveOptions) -> Result<Vec<RefinementRow>> {
    let sizes: Vec<usize> = refinement_sizes(n_interior, levels).collect();
    let rows = sizes.into_par_iter().map(|n| refinement_level(n, c, load, opts)).collect::<Result<Vec<_>>>()?;
    Ok(with_ratios(rows))
}

fn refinement_sizes(n_interior: usize, levels: usize) -> impl Iterator<Item = usize> {
    std::iter::successors(Some(n_interior), |n| Some(2 * (n + 1) - 1)).take(levels)
}

fn refinement_level(n: usize, c: f64, load: Load, opts: &SolveOptions) -> Result<RefinementRow> {
    let sys = assemble_1d(n, c)?;
    let f = load_vector(load.source(c), &sys);
    let trace = pcg_riesz_solve(&sys, &f, &vec![0.0; n], opts)?;
    let err = l2_error(&sys, trace.final_u(), load.exact(c))?;
    Ok(RefinementRow { n_interior: n, h: sys.h, iterations: trace.iterations(), l2_error: err, ratio: None })
}

fn with_ratios(mut rows: Vec<RefinementRow>) -> Vec<RefinementRow> {
    for i in 1..rows.len() {
        rows[i].ratio = Some(rows[i - 1].l2_error / rows[i].l2_error);
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cg::cg_solve;
    use crate::linalg::vector::relative_distance;
    use approx::assert_abs_diff_eq;

    #[test]
    fn assembly_examples() {
        let s = assemble_1d(3, 0.0).unwrap();
        assert_eq!(s.h(), 0.25);
        assert_eq!(s.stiffness().diag(), &[8.0; 3]);
        assert_eq!(s.stiffness().off(), &[-4.0; 2]);
        assert_abs_diff_eq!(s.mass().diag()[1], 1.0 / 6.0, epsilon = 1e-16);
        assert_abs_diff_eq!(s.mass().off()[0], 1.0 / 24.0, epsilon = 1e-16);
        assert_eq!(s.system(), s.stiffness());

        let s = assemble_1d(1, 0.0).unwrap();
        assert_eq!(s.system().diag(), &[4.0]);

        let s = assemble_1d(7, 1.0).unwrap();
        for d in s.system().diag() {
            assert_abs_diff_eq!(*d, 2.0 / s.h() + 4.0 * s.h() / 6.0, epsilon = 1e-13);
        }
        assert!(assemble_1d(0, 0.0).is_err());
        assert!(assemble_1d(3, -1.0).is_err());
    }

    #[test]
    fn load_examples() {
        let s = assemble_1d(3, 0.0).unwrap();
        for fi in load_vector(|_| 1.0, &s) {
            assert_abs_diff_eq!(fi, 0.25, epsilon = 1e-15);
        }
        assert_eq!(load_vector(|_| 0.0, &s), vec![0.0; 3]);

        let s = assemble_1d(15, 0.0).unwrap();
        let f = load_vector(|x| PI * PI * (PI * x).sin(), &s);
        let h = s.h();
        for (fi, xi) in f.iter().zip(s.nodes()) {
            let analytic = 2.0 * (1.0 - (PI * h).cos()) * (PI * xi).sin() / h;
            assert!((fi - analytic).abs() <= 1e-8, "{fi} vs {analytic}");
        }
    }

    #[test]
    fn riesz_examples() {
        let s = assemble_1d(5, 2.0).unwrap();
        let km = s.stiffness().add_scaled(s.mass(), 1.0).unwrap();
        let e1 = [1.0, 0.0, 0.0, 0.0, 0.0];
        let back = riesz_apply(&s, &km.matvec(&e1)).unwrap();
        assert!(relative_distance(&e1, &back) <= 1e-14);
        assert_eq!(riesz_apply(&s, &[0.0; 5]).unwrap(), vec![0.0; 5]);
        assert!(riesz_apply(&s, &[1.0; 4]).is_err());

        // n = 3: K+M has diagonal d = 8 + 1/6 and off-diagonal o = −4 + 1/24.
        let s = assemble_1d(3, 0.0).unwrap();
        let (d, o) = (8.0 + 1.0 / 6.0, -4.0 + 1.0 / 24.0);
        let det = d * (d * d - o * o) - o * (o * d);
        let want = [(d * d - o * o) / det, -o * d / det, o * o / det];
        let got = riesz_apply(&s, &[1.0, 0.0, 0.0]).unwrap();
        for (g, w) in got.iter().zip(want) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-15);
        }
    }

    #[test]
    fn identity_preconditioner_reproduces_cg_bitwise() {
        let s = assemble_1d(120, 1.0).unwrap();
        let f = load_vector(|x| x * x * (1.0 + x), &s);
        let opts = SolveOptions::default();
        let cg = cg_solve(s.system(), &f, &[0.0; 120], &opts).unwrap();
        let pcg = pcg_solve(s.system(), &f, |r| Ok(r.to_vec()), &[0.0; 120], &opts, BetaRule::ResidualRatio).unwrap();
        assert!(cg.iterations() > RESIDUAL_REFRESH);
        assert_eq!(cg.steps.len(), pcg.steps.len());
        for (c, p) in cg.steps.iter().zip(&pcg.steps) {
            assert_eq!(c.x, p.u);
            assert_eq!(c.r, p.r);
            assert_eq!(c.p, p.p);
            assert_eq!(c.alpha, p.alpha);
            assert_eq!(c.beta, p.beta);
            assert_eq!(c.r_norm, p.r_norm);
        }

        let conj = pcg_solve(s.system(), &f, |r| Ok(r.to_vec()), &[0.0; 120], &opts, BetaRule::Conjugation).unwrap();
        assert!(relative_distance(cg.final_x(), conj.final_u()) <= 1e-9);
    }

    #[test]
    fn pcg_small_system() {
        let s = assemble_1d(3, 0.0).unwrap();
        let f = load_vector(|_| 1.0, &s);
        let t = pcg_riesz_solve(&s, &f, &[0.0; 3], &SolveOptions::default()).unwrap();
        assert!(t.converged);
        let res = sub(&f, &s.system().matvec(t.final_u()));
        assert!(norm(&res) <= 1e-10 * norm(&f));
        // Exact solution x(1−x)/2 is reproduced at the nodes in 1D.
        for (u, x) in t.final_u().iter().zip(s.nodes()) {
            assert_abs_diff_eq!(*u, 0.5 * x * (1.0 - x), epsilon = 1e-12);
        }
    }

    #[test]
    fn riesz_preconditioner_is_exact_when_c_is_one() {
        let s = assemble_1d(63, 1.0).unwrap();
        let f = load_vector(|x| PI * PI * (PI * x).sin(), &s);
        let t = pcg_riesz_solve(&s, &f, &[0.0; 63], &SolveOptions::default()).unwrap();
        assert!(t.converged);
        assert!(t.iterations() <= 5, "{} iterations", t.iterations());
    }

    #[test]
    fn operator_form_matches_pcg() {
        let s = assemble_1d(3, 0.0).unwrap();
        let f = load_vector(|_| 1.0, &s);
        let opts = SolveOptions::default();
        let a = pcg_riesz_solve(&s, &f, &[0.0; 3], &opts).unwrap();
        let b = operator_cg_solve(&s, &f, &[0.0; 3], &opts).unwrap();
        assert!(compare_traces(&a, &b).unwrap().u <= 1e-12);

        let s = assemble_1d(31, 2.0).unwrap();
        let f = load_vector(Load::SinBenchmark.source(2.0), &s);
        let a = pcg_riesz_solve(&s, &f, &[0.0; 31], &opts).unwrap();
        let b = operator_cg_solve(&s, &f, &[0.0; 31], &opts).unwrap();
        assert!(compare_traces(&a, &b).unwrap().max() <= 1e-10);
    }

    #[test]
    fn operator_form_with_identity_metric_is_plain_cg() {
        let s = assemble_1d(20, 0.0).unwrap();
        let f = load_vector(|_| 1.0, &s);
        let opts = SolveOptions::default();
        let cg = cg_solve(s.system(), &f, &[0.0; 20], &opts).unwrap();
        let op = operator_cg_with_riesz(s.system(), &f, |r| Ok(r.to_vec()), &[0.0; 20], &opts).unwrap();
        assert_eq!(cg.steps.len(), op.steps.len());
        for (c, o) in cg.steps.iter().zip(&op.steps).take(cg.iterations()) {
            assert!(relative_distance(&c.x, &o.u) <= 1e-10);
            assert!(relative_gap(c.alpha.unwrap(), o.alpha.unwrap()) <= 1e-10);
        }
    }

    #[test]
    fn displayed_alpha_form_differs_from_the_dual_pairing() {
        let s = assemble_1d(15, 1.0).unwrap();
        let f = load_vector(|_| 1.0, &s);
        let t = operator_cg_solve(&s, &f, &[0.0; 15], &SolveOptions::default()).unwrap();
        let forms = alpha_forms(&s, &t);
        for (form, step) in forms.iter().zip(&t.steps) {
            assert_eq!(form.dual_pairing, step.alpha.unwrap());
        }
        assert!(forms.iter().any(|f| f.rel_gap > 1e-3));
    }

    #[test]
    fn l2_error_examples() {
        let s = assemble_1d(7, 0.0).unwrap();
        let hat_sum = |x: f64| 1.0 - (2.0 * x - 1.0).abs();
        let nodal: Vec<f64> = s.nodes().iter().map(|x| hat_sum(*x)).collect();
        assert!(l2_error(&s, &nodal, hat_sum).unwrap() <= 1e-15);

        let s = assemble_1d(31, 0.0).unwrap();
        let e = l2_error(&s, &[0.0; 31], |x| (PI * x).sin()).unwrap();
        assert!((e - 0.5f64.sqrt()).abs() <= 1e-6, "{e}");

        let opts = SolveOptions { rel_tol: 1e-12, max_iter: None };
        let rows = refinement_study(15, 0.0, Load::SinBenchmark, 2, &opts).unwrap();
        assert_eq!(rows[1].n_interior, 31);
        let ratio = rows[1].ratio.unwrap();
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn exact_solutions_satisfy_the_equation() {
        for c in [0.0, 1.0, 5.0] {
            for load in [Load::Const1, Load::SinBenchmark] {
                let (u, f) = (load.exact(c), load.source(c));
                let h = 1e-3;
                for x in [0.1, 0.37, 0.8] {
                    let upp = (u(x + h) - 2.0 * u(x) + u(x - h)) / (h * h);
                    assert!((-upp + c * u(x) - f(x)).abs() <= 1e-4, "{load:?} c={c} x={x}");
                }
                assert!(u(0.0).abs() <= 1e-15 && u(1.0).abs() <= 1e-15);
            }
        }
        assert_eq!(Load::parse("const1").unwrap(), Load::Const1);
        assert!(Load::parse("gauss").is_err());
    }

    #[test]
    fn parallel_refinement_matches_sequential() {
        let opts = SolveOptions::default();
        let seq = refinement_study(7, 2.0, Load::SinBenchmark, 4, &opts).unwrap();
        let par = refinement_study_par(7, 2.0, Load::SinBenchmark, 4, &opts).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq.iter().map(|r| r.n_interior).collect::<Vec<_>>(), [7, 15, 31, 63]);
    }
}
