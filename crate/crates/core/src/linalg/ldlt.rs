use super::sym::SymMatrix;
use super::tridiag::Tridiag;
use crate::error::{check_dim, Error, Result};

/// Relative pivot threshold: a pivot at or below this fraction of the
/// largest leading diagonal entry counts as loss of definiteness.
const PIVOT_TOL: f64 = 1e-13;

/// Strictly lower part of a unit lower triangular factor.
#[derive(Debug, Clone, PartialEq)]
pub enum UnitLower {
    /// `l[i-1] = L(i, i-1)` for `i = 1..k`; everything else below the diagonal is zero.
    Bidiagonal(Vec<f64>),
    /// Packed strictly lower triangle, row `i` holding `L(i, 0..i)`.
    Dense(Vec<f64>),
}

/// `A = L·D·Lᵀ` with `L` unit lower triangular and `D = diag(δ₀, …, δ_{k-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct LdlFactors {
    lower: UnitLower,
    diag: Vec<f64>,
    max_leading_diag: f64,
}

#[inline]
fn strict_index(i: usize, j: usize) -> usize {
    debug_assert!(j < i);
    i * (i - 1) / 2 + j
}

fn check_pivot(index: usize, pivot: f64, scale: f64) -> Result<()> {
    if !(pivot > PIVOT_TOL * scale) {
        return Err(Error::NotPositiveDefinite { index, pivot });
    }
    Ok(())
}

impl LdlFactors {
    pub(crate) fn factor_dense(a: &SymMatrix) -> Result<Self> {
        let n = a.order();
        let mut l = vec![0.0; n * (n - 1) / 2];
        let mut d = vec![0.0; n];
        let mut scale = 0.0f64;
        for i in 0..n {
            scale = scale.max(a.get(i, i).abs());
            for j in 0..i {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[strict_index(i, k)] * l[strict_index(j, k)] * d[k];
                }
                l[strict_index(i, j)] = s / d[j];
            }
            let mut pivot = a.get(i, i);
            for k in 0..i {
                let lik = l[strict_index(i, k)];
                pivot -= lik * lik * d[k];
            }
            check_pivot(i, pivot, scale)?;
            d[i] = pivot;
        }
        Ok(Self { lower: UnitLower::Dense(l), diag: d, max_leading_diag: scale })
    }

    pub(crate) fn factor_tridiag(t: &Tridiag) -> Result<Self> {
        let mut f = Self::empty_bidiagonal();
        for (i, &sigma) in t.diag().iter().enumerate() {
            let tau = if i == 0 { 0.0 } else { t.off()[i - 1] };
            f.extend_tridiagonal(sigma, tau)?;
        }
        Ok(f)
    }

    /// Factors of the 0×0 tridiagonal matrix, ready for [`extend_tridiagonal`](Self::extend_tridiagonal).
    pub fn empty_bidiagonal() -> Self {
        Self { lower: UnitLower::Bidiagonal(Vec::new()), diag: Vec::new(), max_leading_diag: 0.0 }
    }

    /// Grows the factorization of `T_k` into that of `T_{k+1}` given the new
    /// diagonal entry `sigma` and coupling `tau` (ignored for the first row).
    /// Existing entries are never touched.
    pub fn extend_tridiagonal(&mut self, sigma: f64, tau: f64) -> Result<()> {
        let UnitLower::Bidiagonal(l) = &mut self.lower else {
            return Err(Error::InvalidInput("cannot extend a dense factorization".into()));
        };
        let k = self.diag.len();
        let scale = self.max_leading_diag.max(sigma.abs());
        let (lk, pivot) = if k == 0 {
            (None, sigma)
        } else {
            let lk = tau / self.diag[k - 1];
            (Some(lk), sigma - lk * tau)
        };
        check_pivot(k, pivot, scale)?;
        l.extend(lk);
        self.max_leading_diag = scale;
        self.diag.push(pivot);
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn lower(&self) -> &UnitLower {
        &self.lower
    }

    /// `L(i, j)` including the unit diagonal and structural zeros.
    pub fn l(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => 0.0,
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Greater => match &self.lower {
                UnitLower::Bidiagonal(l) => {
                    if i == j + 1 {
                        l[j]
                    } else {
                        0.0
                    }
                }
                UnitLower::Dense(l) => l[strict_index(i, j)],
            },
        }
    }

    /// Solves `L·D·Lᵀ·z = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.order();
        check_dim(n, rhs.len())?;
        let mut z = rhs.to_vec();
        match &self.lower {
            UnitLower::Bidiagonal(l) => {
                for i in 1..n {
                    z[i] -= l[i - 1] * z[i - 1];
                }
                for (zi, di) in z.iter_mut().zip(&self.diag) {
                    *zi /= di;
                }
                for i in (0..n.saturating_sub(1)).rev() {
                    z[i] -= l[i] * z[i + 1];
                }
            }
            UnitLower::Dense(l) => {
                for i in 0..n {
                    for j in 0..i {
                        z[i] -= l[strict_index(i, j)] * z[j];
                    }
                }
                for (zi, di) in z.iter_mut().zip(&self.diag) {
                    *zi /= di;
                }
                for i in (0..n).rev() {
                    for k in i + 1..n {
                        z[i] -= l[strict_index(k, i)] * z[k];
                    }
                }
            }
        }
        Ok(z)
    }

    /// `det(LDLᵀ) = Π δ_i`.
    pub fn determinant(&self) -> f64 {
        self.diag.iter().product()
    }

    /// Multiplies the factors back together.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.order();
        SymMatrix::from_fn(n, |i, j| (0..=j).map(|k| self.l(i, k) * self.diag[k] * self.l(j, k)).sum())
    }
}

/// Product of the pivots; the determinant of the factored matrix.
pub fn det_from_ldlt(f: &LdlFactors) -> f64 {
    f.determinant()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{spd_from_spectrum, SpdMatrix};
    use approx::assert_relative_eq;

    #[test]
    fn one_by_one() {
        let f = SymMatrix::from_diagonal(&[4.0]).ldlt().unwrap();
        assert_eq!(f.diag(), &[4.0]);
        assert_eq!(f.l(0, 0), 1.0);
        assert_eq!(det_from_ldlt(&f), 4.0);
    }

    #[test]
    fn tridiagonal_hand_elimination() {
        let t = Tridiag::new(vec![2.0, 2.0], vec![1.0]).unwrap();
        let f = t.ldlt().unwrap();
        assert_eq!(f.lower(), &UnitLower::Bidiagonal(vec![0.5]));
        assert_eq!(f.diag(), &[2.0, 1.5]);
        assert_eq!(f.determinant(), 3.0);
        let z = f.solve(&[1.0, 0.0]).unwrap();
        assert_relative_eq!(z[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(z[1], -1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn indefinite_fails_at_second_pivot() {
        let m = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        match m.ldlt() {
            Err(Error::NotPositiveDefinite { index, pivot }) => {
                assert_eq!(index, 1);
                assert_eq!(pivot, -3.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        let t = Tridiag::new(vec![1.0, 1.0], vec![2.0]).unwrap();
        assert!(matches!(t.ldlt(), Err(Error::NotPositiveDefinite { index: 1, .. })));
    }

    #[test]
    fn near_zero_pivot_is_rejected() {
        let m = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0 + 1e-15]]).unwrap();
        assert!(m.ldlt().is_err());
    }

    #[test]
    fn solve_examples() {
        let id = SymMatrix::identity(2).ldlt().unwrap();
        assert_eq!(id.solve(&[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
        let d = SymMatrix::from_diagonal(&[2.0, 5.0]).ldlt().unwrap();
        assert_eq!(d.solve(&[2.0, 5.0]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(d.determinant(), 10.0);
        assert!(matches!(d.solve(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dense_and_tridiagonal_paths_agree() {
        let t = Tridiag::new(vec![4.0, 5.0, 6.0, 3.0], vec![1.0, -2.0, 0.5]).unwrap();
        let a = t.ldlt().unwrap();
        let b = t.to_sym().ldlt().unwrap();
        for (x, y) in a.diag().iter().zip(b.diag()) {
            assert_relative_eq!(x, y, max_relative = 1e-14);
        }
        let rhs = [1.0, -1.0, 2.0, 0.25];
        let (za, zb) = (a.solve(&rhs).unwrap(), b.solve(&rhs).unwrap());
        for (x, y) in za.iter().zip(&zb) {
            assert_relative_eq!(x, y, max_relative = 1e-13);
        }
    }

    #[test]
    fn extension_keeps_prefix() {
        let mut f = LdlFactors::empty_bidiagonal();
        f.extend_tridiagonal(2.0, 0.0).unwrap();
        let before = f.clone();
        f.extend_tridiagonal(2.0, 1.0).unwrap();
        assert_eq!(f.diag()[0].to_bits(), before.diag()[0].to_bits());
        assert_eq!(f.diag()[1], 1.5);
    }

    #[test]
    fn reconstruction_on_random_spd() {
        for seed in 0..10u64 {
            for n in [1usize, 4, 11, 20] {
                let spectrum: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 3.7).collect();
                let a = spd_from_spectrum(&spectrum, seed).unwrap();
                let back = a.factors().reconstruct();
                let err = back
                    .packed()
                    .iter()
                    .zip(a.sym().packed())
                    .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                assert!(err <= 1e-10 * a.max_abs(), "seed {seed} n {n}: {err}");
                let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.5).collect();
                let z = a.solve(&rhs).unwrap();
                let res = crate::linalg::vector::sub(&a.matvec(&z), &rhs);
                assert!(crate::linalg::vector::norm(&res) <= 1e-10 * crate::linalg::vector::norm(&rhs));
                let _ = SpdMatrix::new(back).unwrap();
            }
        }
    }
}
