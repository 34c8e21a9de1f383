//! Residual and conjugate polynomials of a CG run, their roots, and the
//! spectral step measure under which they are orthogonal.
//!
//! Polynomials are kept as monomial coefficients. That is only reasonable
//! for the low degrees used here; roots never come from the coefficients but
//! from symmetric tridiagonal eigenproblems.

use std::fmt::Write as _;

use crate::error::{check_dim, Error, Result};
use crate::linalg::vector::{axpy, dot, norm};
use crate::linalg::{sym_eigen, LdlFactors, LinearOperator, SpdMatrix, Tridiag};

/// Polynomial `c₀ + c₁λ + … + c_dλ^d`, ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCoeffs(Vec<f64>);

impl PolyCoeffs {
    /// Trailing zero coefficients are dropped; the zero polynomial is `[]`.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self(coeffs)
    }

    pub fn one() -> Self {
        Self(vec![1.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, lambda: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * lambda + c)
    }

    /// `p(A)·v` by Horner's scheme on vectors.
    pub fn apply<A: LinearOperator + ?Sized>(&self, a: &A, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(a.dim(), v.len())?;
        let mut y = vec![0.0; v.len()];
        for c in self.0.iter().rev() {
            y = a.apply(&y);
            axpy(*c, v, &mut y);
        }
        Ok(y)
    }

    /// `max |p(λ)|` over `samples` evenly spaced points of `[lo, hi]`.
    pub fn max_abs_on(&self, lo: f64, hi: f64, samples: usize) -> f64 {
        let samples = samples.max(2);
        (0..samples)
            .map(|i| self.eval(lo + (hi - lo) * i as f64 / (samples - 1) as f64).abs())
            .fold(0.0, f64::max)
    }

    /// `(a + bλ)·self + c·other`.
    fn combine(&self, a: f64, b: f64, c: f64, other: &PolyCoeffs) -> PolyCoeffs {
        let len = (self.0.len() + 1).max(other.0.len());
        let mut out = vec![0.0; len];
        for (i, s) in self.0.iter().enumerate() {
            out[i] += a * s;
            out[i + 1] += b * s;
        }
        for (i, o) in other.0.iter().enumerate() {
            out[i] += c * o;
        }
        PolyCoeffs::new(out)
    }
}

/// Anything that can be evaluated pointwise as a polynomial in `λ`.
pub trait Polynomial {
    fn eval(&self, lambda: f64) -> f64;
}

impl Polynomial for PolyCoeffs {
    fn eval(&self, lambda: f64) -> f64 {
        PolyCoeffs::eval(self, lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Residual,
    Conjugate,
}

/// `R_k` or `P_k` of a CG run, evaluated by running its three-term recurrence
/// at the requested point. Unlike the monomial coefficients this stays
/// accurate when the coefficients of `λ^j` grow large and cancel on the
/// spectrum.
#[derive(Debug, Clone, Copy)]
pub struct RecurrencePoly<'a> {
    family: Family,
    degree: usize,
    alphas: &'a [f64],
    betas: &'a [f64],
}

impl<'a> RecurrencePoly<'a> {
    /// `R_k`; needs `α₀..α_{k-1}` and `β₀..β_{k-2}`.
    pub fn residual(alphas: &'a [f64], betas: &'a [f64], k: usize) -> Result<Self> {
        require(k, alphas.len())?;
        require(k.saturating_sub(1), betas.len())?;
        Ok(Self { family: Family::Residual, degree: k, alphas, betas })
    }

    /// `P_k`; needs `α₀..α_{k-1}` and `β₀..β_{k-1}`.
    pub fn conjugate(alphas: &'a [f64], betas: &'a [f64], k: usize) -> Result<Self> {
        require(k, alphas.len())?;
        require(k, betas.len())?;
        Ok(Self { family: Family::Conjugate, degree: k, alphas, betas })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// The same polynomial in monomial coefficients.
    pub fn to_coeffs(&self) -> PolyCoeffs {
        let all = match self.family {
            Family::Residual => residual_polys(self.alphas, self.betas, self.degree),
            Family::Conjugate => conjugate_polys(self.alphas, self.betas, self.degree),
        };
        all.expect("lengths checked on construction").swap_remove(self.degree)
    }
}

impl Polynomial for RecurrencePoly<'_> {
    fn eval(&self, lambda: f64) -> f64 {
        let (a, b) = (self.alphas, self.betas);
        let (mut prev, mut cur) = (0.0, 1.0);
        for k in 0..self.degree {
            let next = match (self.family, k) {
                (Family::Residual, 0) => (1.0 - a[0] * lambda) * cur,
                (Family::Residual, _) => {
                    let c = a[k] / a[k - 1] * b[k - 1];
                    (1.0 + c - a[k] * lambda) * cur - c * prev
                }
                (Family::Conjugate, 0) => (1.0 + b[0] - a[0] * lambda) * cur,
                (Family::Conjugate, _) => (1.0 + b[k] - a[k] * lambda) * cur - b[k - 1] * prev,
            };
            prev = cur;
            cur = next;
        }
        cur
    }
}

/// Horner evaluation of `p` at `lambda`.
pub fn poly_eval(p: &PolyCoeffs, lambda: f64) -> f64 {
    p.eval(lambda)
}

fn require(requested: usize, available: usize) -> Result<()> {
    if available < requested {
        return Err(Error::InsufficientCoefficients { requested, available });
    }
    Ok(())
}

/// `R₀..R_{k_max}` from the decoupled three-term recurrence
/// `R_{k+1} = (1 + (α_k/α_{k-1})β_{k-1} − α_kλ)R_k − (α_k/α_{k-1})β_{k-1}R_{k-1}`,
/// with `R₁ = 1 − α₀λ`. Needs `α₀..α_{k_max-1}` and `β₀..β_{k_max-2}`.
pub fn residual_polys(alphas: &[f64], betas: &[f64], k_max: usize) -> Result<Vec<PolyCoeffs>> {
    require(k_max, alphas.len())?;
    require(k_max.saturating_sub(1), betas.len())?;
    let mut out = vec![PolyCoeffs::one()];
    for k in 0..k_max {
        let next = if k == 0 {
            out[0].combine(1.0, -alphas[0], 0.0, &PolyCoeffs::one())
        } else {
            let c = alphas[k] / alphas[k - 1] * betas[k - 1];
            let mut next = out[k].combine(1.0 + c, -alphas[k], -c, &out[k - 1]);
            // (1 + c) − c is 1 in exact arithmetic only; pin the constant term.
            next.0[0] = 1.0;
            next
        };
        out.push(next);
    }
    Ok(out)
}

/// `P₀..P_{k_max}` from `P_{k+1} = (1 + β_k − α_kλ)P_k − β_{k-1}P_{k-1}`, with
/// `P₁ = 1 + β₀ − α₀λ`. Needs `α₀..α_{k_max-1}` and `β₀..β_{k_max-1}`.
pub fn conjugate_polys(alphas: &[f64], betas: &[f64], k_max: usize) -> Result<Vec<PolyCoeffs>> {
    require(k_max, alphas.len())?;
    require(k_max, betas.len())?;
    let mut out = vec![PolyCoeffs::one()];
    for k in 0..k_max {
        let next = if k == 0 {
            out[0].combine(1.0 + betas[0], -alphas[0], 0.0, &PolyCoeffs::one())
        } else {
            out[k].combine(1.0 + betas[k], -alphas[k], -betas[k - 1], &out[k - 1])
        };
        out.push(next);
    }
    Ok(out)
}

/// The intertwined pair `R_{k+1} = R_k − α_kλP_k`, `P_{k+1} = R_{k+1} + β_kP_k`,
/// returning `(R₀..R_{k_max}, P₀..P_{k_max-1})`. Needs `β₀..β_{k_max-2}`.
pub fn coupled_polys(alphas: &[f64], betas: &[f64], k_max: usize) -> Result<(Vec<PolyCoeffs>, Vec<PolyCoeffs>)> {
    require(k_max, alphas.len())?;
    require(k_max.saturating_sub(1), betas.len())?;
    let mut r = vec![PolyCoeffs::one()];
    let mut p = vec![PolyCoeffs::one()];
    for k in 0..k_max {
        let lambda_p = p[k].combine(0.0, 1.0, 0.0, &PolyCoeffs::one());
        let r_next = r[k].combine(1.0, 0.0, -alphas[k], &lambda_p);
        if k + 1 < k_max {
            p.push(r_next.combine(1.0, 0.0, betas[k], &p[k]));
        }
        r.push(r_next);
    }
    Ok((r, p))
}

fn check_positive(name: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !(*v > 0.0)) {
        Some(i) => Err(Error::InvalidTrace(format!("{name}[{i}] = {} is not positive", values[i]))),
        None => Ok(()),
    }
}

/// `T_k` rebuilt from CG coefficients: `σ₀ = 1/α₀`,
/// `σ_j = 1/α_j + β_{j-1}/α_{j-1}`, `τ_j = √β_{j-1}/α_{j-1}`, with
/// `k = alphas.len()`.
pub fn tk_from_cg(alphas: &[f64], betas: &[f64]) -> Result<Tridiag> {
    let k = alphas.len();
    if k == 0 {
        return Err(Error::InvalidTrace("no step sizes".into()));
    }
    require(k - 1, betas.len())?;
    let betas = &betas[..k - 1];
    check_positive("alpha", alphas)?;
    check_positive("beta", betas)?;
    let diag = (0..k).map(|j| if j == 0 { 1.0 / alphas[0] } else { 1.0 / alphas[j] + betas[j - 1] / alphas[j - 1] }).collect();
    let off = (1..k).map(|j| betas[j - 1].sqrt() / alphas[j - 1]).collect();
    Tridiag::new(diag, off)
}

/// Roots of `R_k`: the eigenvalues of `T_k`.
pub fn residual_poly_roots(t: &Tridiag) -> Vec<f64> {
    t.eigenvalues()
}

/// Roots of `P_k`, `k = factors.order()`: the eigenvalues of
/// `T̄_k = D^{1/2}LᵀLD^{1/2}` with `β_{k-1}/α_{k-1}` added to its last
/// diagonal entry. `factors` must be the LDLᵀ factors of `T_k`.
pub fn conjugate_poly_roots(alphas: &[f64], betas: &[f64], factors: &LdlFactors) -> Result<Vec<f64>> {
    let k = factors.order();
    if k == 0 {
        return Ok(Vec::new());
    }
    require(k, alphas.len())?;
    require(k, betas.len())?;
    let d = factors.diag();
    let l = |i: usize| if i < k { factors.l(i, i - 1) } else { 0.0 };
    let mut diag: Vec<f64> = (0..k).map(|i| d[i] * (1.0 + l(i + 1).powi(2))).collect();
    diag[k - 1] += betas[k - 1] / alphas[k - 1];
    let off = (0..k - 1).map(|i| d[i].sqrt() * l(i + 1) * d[i + 1].sqrt()).collect();
    Ok(Tridiag::new(diag, off)?.eigenvalues())
}

/// The step measure `m(λ)` of a starting residual: eigenvalues of `A` with
/// weights `(φ_iᵀr₀)²/‖r₀‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    abscissae: Vec<f64>,
    weights: Vec<f64>,
}

/// Eigenvalues closer than this fraction of `λ_max` are one abscissa.
const MERGE_TOL: f64 = 1e-10;
/// Weights below this carry no information beyond rounding and are dropped.
const NEGLIGIBLE_WEIGHT: f64 = 1e-24;

impl SpectralMeasure {
    /// Builds the measure from eigenpairs (`vectors[i]` belongs to `values[i]`).
    pub fn from_eigenpairs(values: &[f64], vectors: &[Vec<f64>], r0: &[f64]) -> Result<Self> {
        check_dim(values.len(), vectors.len())?;
        let r0_norm = norm(r0);
        if r0_norm == 0.0 {
            return Err(Error::EmptyStart);
        }
        let mut points: Vec<(f64, f64)> = values
            .iter()
            .zip(vectors)
            .map(|(l, phi)| {
                check_dim(r0.len(), phi.len())?;
                Ok((*l, (dot(phi, r0) / r0_norm).powi(2)))
            })
            .collect::<Result<_>>()?;
        if let Some((l, _)) = points.iter().find(|(l, _)| !(*l > 0.0)) {
            return Err(Error::InvalidInput(format!("eigenvalue {l} is not positive")));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let lambda_max = points.last().map_or(0.0, |p| p.0);

        let mut abscissae: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut group = (0.0, 0.0, 0usize);
        let mut flush = |group: &mut (f64, f64, usize)| {
            if group.2 > 0 && group.1 > NEGLIGIBLE_WEIGHT {
                abscissae.push(group.0 / group.2 as f64);
                weights.push(group.1);
            }
            *group = (0.0, 0.0, 0);
        };
        let mut anchor = f64::NEG_INFINITY;
        for (l, w) in points {
            if l - anchor > MERGE_TOL * lambda_max {
                flush(&mut group);
                anchor = l;
            }
            group = (group.0 + l, group.1 + w, group.2 + 1);
        }
        flush(&mut group);
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { abscissae, weights })
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.abscissae
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫ f dm = Σ w_i f(λ_i)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.abscissae.iter().zip(&self.weights).map(|(l, w)| w * f(*l)).sum()
    }
}

/// Measure of `r0` with respect to the eigenpairs of `A`, computed by a dense
/// Jacobi eigendecomposition.
pub fn spectral_measure(a: &SpdMatrix, r0: &[f64]) -> Result<SpectralMeasure> {
    check_dim(a.order(), r0.len())?;
    let eig = sym_eigen(a.sym());
    SpectralMeasure::from_eigenpairs(&eig.values, &eig.vectors, r0)
}

/// `∫ f·g dm`, or `∫ λ·f·g dm` when `weight_by_lambda` is set.
pub fn stieltjes_inner<F, G>(m: &SpectralMeasure, f: &F, g: &G, weight_by_lambda: bool) -> f64
where
    F: Polynomial + ?Sized,
    G: Polynomial + ?Sized,
{
    m.integrate(|l| {
        let w = if weight_by_lambda { l } else { 1.0 };
        w * f.eval(l) * g.eval(l)
    })
}

/// One polynomial per line: degree, then the ascending coefficients.
/// The zero polynomial is written with degree `-1`.
pub fn format_polys(polys: &[PolyCoeffs]) -> String {
    let mut out = String::new();
    for p in polys {
        match p.degree() {
            Some(d) => write!(out, "{d}").unwrap(),
            None => out.push_str("-1"),
        }
        for c in p.coeffs() {
            write!(out, " {c:.16e}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_polys(text: &str) -> Result<Vec<PolyCoeffs>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut fields = line.split_whitespace();
        let Some(degree) = fields.next() else { continue };
        let degree: i64 = degree
            .parse()
            .map_err(|_| Error::Parse { line: line_no, message: format!("bad degree {degree:?}") })?;
        let coeffs: Vec<f64> = fields
            .map(|f| f.parse().map_err(|_| Error::Parse { line: line_no, message: format!("bad coefficient {f:?}") }))
            .collect::<Result<_>>()?;
        if coeffs.len() as i64 != degree + 1 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("degree {degree} needs {} coefficients, found {}", degree + 1, coeffs.len()),
            });
        }
        out.push(PolyCoeffs::new(coeffs));
    }
    Ok(out)
}
