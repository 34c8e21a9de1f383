use super::ldlt::LdlFactors;
use super::sym::SymMatrix;
use super::LinearOperator;
use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix: diagonal `σ₀..σ_{k-1}` and off-diagonal `τ₁..τ_{k-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidInput("tridiagonal matrix needs at least one row".into()));
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::InvalidInput(format!(
                "off-diagonal length {} does not match diagonal length {}",
                off.len(),
                diag.len()
            )));
        }
        super::vector::check_finite(&diag)?;
        super::vector::check_finite(&off)?;
        Ok(Self { diag, off })
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// Appends a row/column with diagonal `sigma` coupled to the previous row by `tau`.
    pub fn push(&mut self, sigma: f64, tau: f64) {
        self.off.push(tau);
        self.diag.push(sigma);
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.order();
        assert_eq!(x.len(), n, "matvec dimension");
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    pub fn to_sym(&self) -> SymMatrix {
        SymMatrix::from_fn(self.order(), |i, j| {
            if i == j {
                self.diag[i]
            } else if i == j + 1 {
                self.off[j]
            } else {
                0.0
            }
        })
    }

    pub fn ldlt(&self) -> Result<LdlFactors> {
        LdlFactors::factor_tridiag(self)
    }

    /// Entrywise sum of two tridiagonal matrices of the same order.
    pub fn add_scaled(&self, other: &Tridiag, scale: f64) -> Result<Tridiag> {
        crate::error::check_dim(self.order(), other.order())?;
        Tridiag::new(
            self.diag.iter().zip(&other.diag).map(|(a, b)| a + scale * b).collect(),
            self.off.iter().zip(&other.off).map(|(a, b)| a + scale * b).collect(),
        )
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.order();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `mu`: the sign changes in the
    /// Sturm sequence of leading principal minors, counted through the pivots
    /// of `T − μI`.
    pub fn sturm_count(&self, mu: f64) -> usize {
        let (lo, hi) = self.gershgorin();
        let tiny = f64::EPSILON * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.order() {
            let coupling = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] / d };
            d = self.diag[i] - mu - coupling;
            if d == 0.0 {
                d = -tiny;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// All eigenvalues in ascending order, by Sturm-count bisection.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.order();
        let (glo, ghi) = self.gershgorin();
        let pad = f64::EPSILON * glo.abs().max(ghi.abs()).max(f64::MIN_POSITIVE) * n as f64;
        let (glo, ghi) = (glo - pad, ghi + pad);
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let mut lo = out.last().copied().unwrap_or(glo).max(glo);
            let mut hi = ghi;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                    break;
                }
                if self.sturm_count(mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        out
    }
}

impl LinearOperator for Tridiag {
    fn dim(&self) -> usize {
        self.order()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x)
    }
}

/// Eigenvalues of a symmetric tridiagonal matrix, ascending.
pub fn tridiag_eigenvalues(t: &Tridiag) -> Vec<f64> {
    t.eigenvalues()
}
