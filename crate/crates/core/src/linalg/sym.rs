use super::ldlt::LdlFactors;
use super::vector;
use super::LinearOperator;
use crate::error::{check_dim, Error, Result};

/// Symmetric matrix stored as its packed lower triangle, row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    lower: Vec<f64>,
}

#[inline]
pub(crate) fn packed_index(i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    i * (i + 1) / 2 + j
}

impl SymMatrix {
    /// Builds a matrix from its packed lower triangle (row `i` holds `i + 1` entries).
    pub fn from_packed(n: usize, lower: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("matrix order must be at least 1".into()));
        }
        check_dim(n * (n + 1) / 2, lower.len())?;
        vector::check_finite(&lower)?;
        Ok(Self { n, lower })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(n > 0, "matrix order must be at least 1");
        let mut lower = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                lower.push(f(i, j));
            }
        }
        Self { n, lower }
    }

    /// Builds from full rows, rejecting asymmetric input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for row in rows {
            check_dim(n, row.len())?;
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (rows[i][j], rows[j][i]);
                if (a - b).abs() > 1e-14 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::InvalidInput(format!("entry ({i},{j}) differs from ({j},{i})")));
                }
            }
        }
        Self::from_packed(n, (0..n).flat_map(|i| rows[i][..=i].to_vec()).collect())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[packed_index(i, j)]
    }

    pub fn packed(&self) -> &[f64] {
        &self.lower
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "matvec dimension");
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.lower[packed_index(i, 0)..=packed_index(i, i)];
            for (j, a) in row.iter().enumerate() {
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// `‖·‖_max` over all entries.
    pub fn max_abs(&self) -> f64 {
        vector::max_abs(&self.lower)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect()
    }

    /// Dense product `self · other` (not symmetric in general).
    pub fn mul_dense(&self, other: &SymMatrix) -> Vec<Vec<f64>> {
        let n = self.n;
        assert_eq!(n, other.n);
        let mut out = vec![vec![0.0; n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..n).map(|k| self.get(i, k) * other.get(k, j)).sum();
            }
        }
        out
    }

    pub fn ldlt(&self) -> Result<LdlFactors> {
        LdlFactors::factor_dense(self)
    }
}

impl LinearOperator for SymMatrix {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x)
    }
}

/// A symmetric matrix certified positive definite by a successful LDLᵀ
/// factorization. The factors are kept for direct solves and determinants.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    sym: SymMatrix,
    factors: LdlFactors,
}

impl SpdMatrix {
    pub fn new(sym: SymMatrix) -> Result<Self> {
        let factors = sym.ldlt()?;
        Ok(Self { sym, factors })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(SymMatrix::from_rows(rows)?)
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Self::new(SymMatrix::from_diagonal(d))
    }

    pub fn identity(n: usize) -> Self {
        Self::new(SymMatrix::identity(n)).expect("identity is SPD")
    }

    pub fn order(&self) -> usize {
        self.sym.n
    }

    pub fn sym(&self) -> &SymMatrix {
        &self.sym
    }

    pub fn factors(&self) -> &LdlFactors {
        &self.factors
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.sym.get(i, j)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.sym.matvec(x)
    }

    /// Direct solve through the stored factors.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.factors.solve(rhs)
    }

    pub fn determinant(&self) -> f64 {
        self.factors.determinant()
    }

    pub fn max_abs(&self) -> f64 {
        self.sym.max_abs()
    }

    /// `xᵀAy`
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        vector::dot(x, &self.matvec(y))
    }
}

impl LinearOperator for SpdMatrix {
    fn dim(&self) -> usize {
        self.sym.n
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.sym.matvec(x)
    }
}
