//! Three optimization-viewpoint routes to the CG iterates: marching along a
//! given set of conjugate directions, minimizing over a two-dimensional
//! plane at each step, and BFGS with exact line search started from `H₀ = I`.

use crate::cg::{check_conjugacy, CgStep, CgTrace, SolveOptions, RESIDUAL_REFRESH};
use crate::error::{check_dim, Error, Result};
use crate::linalg::vector::{axpy, dot, is_zero, norm, relative_distance, sub};
use crate::linalg::{LinearOperator, SpdMatrix, SymMatrix};

/// Result of minimizing `J` over `x + span{u, v}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace2dStep {
    /// `x + ξ·u + η·v`.
    pub x_next: Vec<f64>,
    /// `u − (uᵀAv/vᵀAv)·v`, the part of the plane A-conjugate to `v`.
    pub p_tilde: Vec<f64>,
    pub xi: f64,
    pub eta: f64,
}

/// Plane minimization given the residual at the base point. The plane is
/// rewritten as `span{p̃, v}` with `p̃ ⟂_A v`, which decouples it into two
/// line searches. When `rᵀv = 0` (the case in every CG step) the search
/// along `v` is void and `η/ξ = −uᵀAv/vᵀAv`.
struct PlaneSolution {
    p_tilde: Vec<f64>,
    ap_tilde: Vec<f64>,
    av: Vec<f64>,
    xi: f64,
    zeta: f64,
    ratio: f64,
}

impl PlaneSolution {
    fn eta(&self) -> f64 {
        self.xi * self.ratio + self.zeta
    }
}

fn plane_minimize<A: LinearOperator + ?Sized>(a: &A, r: &[f64], u: &[f64], v: &[f64]) -> Result<PlaneSolution> {
    let au = a.apply(u);
    let av = a.apply(v);
    let vav = dot(v, &av);
    if !(vav > 0.0) {
        return Err(Error::DegenerateDirection);
    }
    let ratio = -dot(u, &av) / vav;
    let mut p_tilde = u.to_vec();
    axpy(ratio, v, &mut p_tilde);
    let mut ap_tilde = au;
    axpy(ratio, &av, &mut ap_tilde);
    let pap = dot(&p_tilde, &ap_tilde);
    if !(pap > 0.0) {
        return Err(Error::DegenerateDirection);
    }
    let xi = dot(r, &p_tilde) / pap;
    let zeta = dot(r, v) / vav;
    Ok(PlaneSolution { p_tilde, ap_tilde, av, xi, zeta, ratio })
}

/// Minimizes `J(x + ξu + ηv)` for orthogonal, nonzero `u`, `v`.
///
/// A base point where the residual is orthogonal to both vectors is
/// stationary: `ξ = η = 0` and `x` comes back unchanged.
pub fn subspace2d_step_general<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    x: &[f64],
    u: &[f64],
    v: &[f64],
) -> Result<Subspace2dStep> {
    let n = a.dim();
    for len in [b.len(), x.len(), u.len(), v.len()] {
        check_dim(n, len)?;
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::DegenerateDirection);
    }
    let deviation = dot(u, v).abs() / (nu * nv);
    if deviation > 1e-10 {
        return Err(Error::NotOrthogonal { deviation });
    }
    let r = sub(b, &a.apply(x));
    let plane = plane_minimize(a, &r, u, v)?;
    let (xi, eta) = (plane.xi, plane.eta());
    let mut x_next = x.to_vec();
    axpy(xi, u, &mut x_next);
    axpy(eta, v, &mut x_next);
    Ok(Subspace2dStep { x_next, p_tilde: plane.p_tilde, xi, eta })
}

/// Second vector spanning the plane after the first (steepest descent) step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PlaneChoice {
    /// `span{r_k, p̃_{k-1}}`
    PreviousDirection,
    /// `span{r_k, r_{k-1}}`
    PreviousResidual,
}

/// Runs plane minimizations from `x0`. The stored trace uses CG's field
/// meanings: `p = p̃_k`, `alpha = ξ_k`, `beta = η_k/ξ_k` (the coefficient of
/// the previous vector in `p̃_k`).
fn subspace_march<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    x0: &[f64],
    opts: &SolveOptions,
    choice: PlaneChoice,
) -> Result<CgTrace> {
    let n = a.dim();
    check_dim(n, b.len())?;
    check_dim(n, x0.len())?;
    opts.validate()?;
    let max_iter = opts.max_iter_for(n);
    let threshold = opts.rel_tol * norm(b);

    let mut x = x0.to_vec();
    let mut r = sub(b, &a.apply(&x));
    let mut steps: Vec<CgStep> = Vec::new();

    for k in 0.. {
        let r_norm = norm(&r);
        let done = r_norm <= threshold || is_zero(&r);
        if done || k == max_iter {
            steps.push(CgStep { k, x, r, p: None, alpha: None, beta: None, r_norm });
            return Ok(CgTrace { steps, converged: done, matrix_order: n });
        }
        // Each branch yields the direction, its step, A·direction and the
        // extra move along v (only nonzero at rounding level in practice).
        let (p, alpha, ap, ratio, extra) = if k == 0 {
            let ar = a.apply(&r);
            let rar = dot(&r, &ar);
            if !(rar > 0.0) {
                return Err(Error::Breakdown { step: k, value: rar });
            }
            (r.clone(), dot(&r, &r) / rar, ar, None, None)
        } else {
            let prev = &steps[k - 1];
            let v = match choice {
                PlaneChoice::PreviousDirection => prev.p.as_deref().expect("non-terminal step"),
                PlaneChoice::PreviousResidual => prev.r.as_slice(),
            };
            let plane = plane_minimize(a, &r, &r, v)?;
            let extra = (plane.zeta != 0.0).then(|| (plane.zeta, v.to_vec(), plane.av));
            (plane.p_tilde, plane.xi, plane.ap_tilde, Some(plane.ratio), extra)
        };
        steps.push(CgStep { k, x: x.clone(), r: r.clone(), p: Some(p.clone()), alpha: Some(alpha), beta: ratio, r_norm });

        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        if let Some((zeta, v, av)) = extra {
            axpy(zeta, &v, &mut x);
            axpy(-zeta, &av, &mut r);
        }
        if (k + 1) % RESIDUAL_REFRESH == 0 {
            r = sub(b, &a.apply(&x));
        }
    }
    unreachable!()
}

/// Plane minimization over `x_k + span{r_k, p̃_{k-1}}`; the first step is
/// steepest descent. Produces the CG iterates.
pub fn subspace2d_solve<A: LinearOperator + ?Sized>(a: &A, b: &[f64], x0: &[f64], opts: &SolveOptions) -> Result<CgTrace> {
    subspace_march(a, b, x0, opts, PlaneChoice::PreviousDirection)
}

/// The rejected plane choice `x_k + span{r_k, r_{k-1}}`, together with a
/// record of how far each new residual strays from orthogonality to the
/// residual three steps back.
#[derive(Debug, Clone, PartialEq)]
pub struct RrVariantTrace {
    pub trace: CgTrace,
    /// `(k, |r_{k+1}ᵀr_{k-2}| / (‖r_{k+1}‖‖r_{k-2}‖))` for every `k ≥ 2`
    /// with a nonzero `r_{k+1}`.
    pub lost_orthogonality: Vec<(usize, f64)>,
}

impl RrVariantTrace {
    pub fn worst_lost_orthogonality(&self) -> f64 {
        self.lost_orthogonality.iter().fold(0.0, |m, (_, d)| m.max(*d))
    }
}

pub fn subspace2d_solve_rr_variant<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    x0: &[f64],
    opts: &SolveOptions,
) -> Result<RrVariantTrace> {
    let trace = subspace_march(a, b, x0, opts, PlaneChoice::PreviousResidual)?;
    let rs = trace.residuals();
    let lost_orthogonality = (2..rs.len().saturating_sub(1))
        .filter_map(|k| {
            let (new, old) = (rs[k + 1], rs[k - 2]);
            let scale = norm(new) * norm(old);
            (scale > 0.0).then(|| (k, dot(new, old).abs() / scale))
        })
        .collect();
    Ok(RrVariantTrace { trace, lost_orthogonality })
}

/// One BFGS iterate. `h` is the inverse-Hessian approximation `H_k` used to
/// form `d_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BfgsStep {
    pub k: usize,
    pub x: Vec<f64>,
    /// `∇J(x_k) = A·x_k − b`.
    pub g: Vec<f64>,
    pub d: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub h: SymMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsTrace {
    pub steps: Vec<BfgsStep>,
    pub converged: bool,
}

impl BfgsTrace {
    pub fn iterations(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn iterates(&self) -> Vec<&[f64]> {
        self.steps.iter().map(|s| s.x.as_slice()).collect()
    }

    pub fn final_x(&self) -> &[f64] {
        &self.steps.last().expect("trace always holds the initial step").x
    }

    pub fn final_h(&self) -> &SymMatrix {
        &self.steps.last().expect("trace always holds the initial step").h
    }

    /// `max_k ‖H_k r_{k+1} − r_{k+1}‖ / ‖r_{k+1}‖` (with `r = −g`) over the
    /// residuals that go on to form a new direction. The terminal residual is
    /// left out: at full termination it is rounding noise with no structure.
    pub fn ladder_deviation(&self) -> f64 {
        let continuing = &self.steps[..self.steps.len() - 1];
        continuing
            .windows(2)
            .filter_map(|w| {
                let r_next = &w[1].g;
                let scale = norm(r_next);
                (scale > 0.0).then(|| norm(&sub(&w[0].h.matvec(r_next), r_next)) / scale)
            })
            .fold(0.0, f64::max)
    }
}

/// `H + (1 + yᵀHy/sᵀy)·ssᵀ/sᵀy − (s(Hy)ᵀ + (Hy)sᵀ)/sᵀy`.
fn bfgs_update(h: &SymMatrix, s: &[f64], y: &[f64], sy: f64) -> SymMatrix {
    let hy = h.matvec(y);
    let c = (1.0 + dot(y, &hy) / sy) / sy;
    SymMatrix::from_fn(h.order(), |i, j| h.get(i, j) + c * s[i] * s[j] - (s[i] * hy[j] + hy[i] * s[j]) / sy)
}

/// BFGS on `J(x) = ½xᵀAx − bᵀx` with `H₀ = I` and exact line search.
///
/// Uses the usual `y_k = g_{k+1} − g_k = α_k·A·d_k`, so `s_kᵀy_k > 0` on an
/// SPD quadratic.
pub fn bfgs_quadratic_solve<A: LinearOperator + ?Sized>(a: &A, b: &[f64], x0: &[f64], opts: &SolveOptions) -> Result<BfgsTrace> {
    let n = a.dim();
    check_dim(n, b.len())?;
    check_dim(n, x0.len())?;
    opts.validate()?;
    let max_iter = opts.max_iter_for(n);
    let threshold = opts.rel_tol * norm(b);

    let mut x = x0.to_vec();
    let mut g = sub(&a.apply(&x), b);
    let mut h = SymMatrix::identity(n);
    let mut steps = Vec::new();

    for k in 0.. {
        let done = norm(&g) <= threshold || is_zero(&g);
        if done || k == max_iter {
            steps.push(BfgsStep { k, x, g, d: None, alpha: None, h });
            log::debug!("bfgs: stopped at k={k}, converged={done}");
            return Ok(BfgsTrace { steps, converged: done });
        }
        let d: Vec<f64> = h.matvec(&g).iter().map(|v| -v).collect();
        let ad = a.apply(&d);
        let dad = dot(&d, &ad);
        if !(dad > 0.0) {
            return Err(Error::Breakdown { step: k, value: dad });
        }
        let alpha = -dot(&g, &d) / dad;
        let s: Vec<f64> = d.iter().map(|v| alpha * v).collect();
        let y: Vec<f64> = ad.iter().map(|v| alpha * v).collect();
        let sy = dot(&s, &y);
        if !(sy > 0.0) {
            return Err(Error::Curvature { step: k, value: sy });
        }
        let h_next = bfgs_update(&h, &s, &y, sy);
        steps.push(BfgsStep { k, x: x.clone(), g: g.clone(), d: Some(d), alpha: Some(alpha), h });

        axpy(1.0, &s, &mut x);
        if (k + 1) % RESIDUAL_REFRESH == 0 {
            g = sub(&a.apply(&x), b);
        } else {
            axpy(1.0, &y, &mut g);
        }
        h = h_next;
    }
    unreachable!()
}

/// Marches along the given mutually A-conjugate directions with exact line
/// searches, `α_k = r_kᵀd_k / d_kᵀAd_k`. After `n` directions the result is
/// the solution; `converged` reports `‖r‖ ≤ 1e-8·‖b‖` at the end.
pub fn conjugate_direction_solve(a: &SpdMatrix, b: &[f64], x0: &[f64], dirs: &[&[f64]]) -> Result<CgTrace> {
    let n = a.order();
    check_dim(n, b.len())?;
    check_dim(n, x0.len())?;
    for d in dirs {
        check_dim(n, d.len())?;
    }
    check_conjugacy(a, dirs, 1e-8)?;

    let mut x = x0.to_vec();
    let mut r = sub(b, &a.matvec(&x));
    let mut steps = Vec::with_capacity(dirs.len() + 1);
    for (k, d) in dirs.iter().enumerate() {
        let ad = a.matvec(d);
        let alpha = dot(&r, d) / dot(d, &ad);
        steps.push(CgStep { k, x: x.clone(), r: r.clone(), p: Some(d.to_vec()), alpha: Some(alpha), beta: None, r_norm: norm(&r) });
        axpy(alpha, d, &mut x);
        axpy(-alpha, &ad, &mut r);
    }
    let r_norm = norm(&r);
    let converged = r_norm <= 1e-8 * norm(b) || is_zero(&r);
    steps.push(CgStep { k: dirs.len(), x, r, p: None, alpha: None, beta: None, r_norm });
    Ok(CgTrace { steps, converged, matrix_order: n })
}

/// Pairwise iterate deviations of the three methods at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceRow {
    pub k: usize,
    pub dev_cg_subspace: f64,
    pub dev_cg_bfgs: f64,
    pub dev_subspace_bfgs: f64,
}

impl EquivalenceRow {
    pub fn max(&self) -> f64 {
        self.dev_cg_subspace.max(self.dev_cg_bfgs).max(self.dev_subspace_bfgs)
    }
}

/// Runs CG, plane minimization and BFGS from the same start and reports
/// `‖x_k − y_k‖ / max(‖x_k‖, ‖y_k‖)` for each pair over the steps all three
/// runs share. Runs that differ in length are reported as an invalid trace.
pub fn equivalence_report(a: &SpdMatrix, b: &[f64], x0: &[f64], opts: &SolveOptions) -> Result<Vec<EquivalenceRow>> {
    let cg = crate::cg::cg_solve(a, b, x0, opts)?;
    let sub = subspace2d_solve(a, b, x0, opts)?;
    let bfgs = bfgs_quadratic_solve(a, b, x0, opts)?;
    let (xc, xs, xb) = (cg.iterates(), sub.iterates(), bfgs.iterates());
    if xc.len() != xs.len() || xc.len() != xb.len() {
        return Err(Error::InvalidTrace(format!(
            "iteration counts differ: cg {}, subspace {}, bfgs {}",
            cg.iterations(),
            sub.iterations(),
            bfgs.iterations()
        )));
    }
    Ok((0..xc.len())
        .map(|k| EquivalenceRow {
            k,
            dev_cg_subspace: relative_distance(xc[k], xs[k]),
            dev_cg_bfgs: relative_distance(xc[k], xb[k]),
            dev_subspace_bfgs: relative_distance(xs[k], xb[k]),
        })
        .collect())
}
