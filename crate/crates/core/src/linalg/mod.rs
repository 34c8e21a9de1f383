//! Dense linear algebra for desk-scale symmetric systems.

mod eigen;
pub mod io;
mod ldlt;
mod random;
mod sym;
mod tridiag;
pub mod vector;

pub use eigen::{sym_eigen, SymEigen};
pub use ldlt::{det_from_ldlt, LdlFactors, UnitLower};
pub use random::{condition_spectrum, random_orthogonal, random_spd, random_vector, spd_from_spectrum};
pub use sym::{SpdMatrix, SymMatrix};
pub use tridiag::{tridiag_eigenvalues, Tridiag};

/// Anything that can be applied to a vector as a symmetric linear map.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
}

/// `√(vᵀAv)`.
pub fn a_norm<A: LinearOperator + ?Sized>(a: &A, v: &[f64]) -> crate::Result<f64> {
    crate::error::check_dim(a.dim(), v.len())?;
    let q = vector::dot(v, &a.apply(v));
    Ok(q.max(0.0).sqrt())
}
