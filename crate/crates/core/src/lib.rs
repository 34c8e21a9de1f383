//! Conjugate gradient and the methods it coincides with.
//!
//! The crate implements the reference CG solver with a full per-iteration
//! trace and several independent routes that produce the same iterates on
//! a symmetric positive definite system: generic conjugate directions,
//! two-dimensional subspace minimization, BFGS with exact line search, and
//! Lanczos tridiagonalization with an accumulated LDLᵀ factorization. On top
//! of the traces sit checks for the algebraic identities tying these methods
//! together, the residual/conjugate polynomial viewpoint, convergence-factor
//! experiments for steepest descent and CG, and a 1D finite element model
//! problem where CG on the operator equation becomes preconditioned CG.
//!
//! Everything is dense and desk-scale; the point is verification, not speed.

pub mod cg;
pub mod convergence;
pub mod equivalence;
pub mod error;
pub mod fem;
pub mod lanczos;
pub mod linalg;
pub mod poly;
pub mod report;

pub use cg::{cg_solve, CgStep, CgTrace, SolveOptions};
pub use error::{Error, Result};
pub use linalg::{LdlFactors, LinearOperator, SpdMatrix, SymMatrix, Tridiag};
