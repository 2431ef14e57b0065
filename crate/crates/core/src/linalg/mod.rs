//! Dense complex matrix kernel.
//!
//! Everything downstream (spectral analysis, operator construction, Krein
//! geometry, time evolution) is expressed through [`CMatrix`] and the handful
//! of factorizations in this module: partial-pivoted LU, complex Schur form
//! via Hessenberg reduction and shifted QR, one-sided Jacobi SVD, and the
//! Padé scaling-and-squaring exponential.

mod expm;
mod lu;
mod matrix;
mod schur;
mod svd;
mod tolerance;

pub use expm::{expm, expm_bounded, DEFAULT_EXPM_NORM_BOUND};
pub use lu::{inverse, solve, Lu};
pub use matrix::{inner, norm, outer, outer_transpose, scale_vec, CMatrix, C64};
pub use schur::{eigenvalues, hermitian_eigen, schur, Schur};
pub use svd::{null_space, nullity, rank, svd, Svd};
pub use tolerance::Tolerance;

use thiserror::Error;

/// Largest dimension accepted by the kernel.
pub const N_MAX: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not square: {rows} rows, row {row} has {cols} columns")]
    NotSquare {
        rows: usize,
        row: usize,
        cols: usize,
    },
    #[error("matrix has a non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension {0} exceeds the configured maximum {N_MAX}")]
    TooLarge(usize),
    #[error("empty matrix")]
    Empty,
    #[error("QR iteration did not converge within {0} sweeps")]
    NonConvergence(usize),
    #[error("matrix is singular at tolerance (pivot magnitude {pivot:.3e} <= {threshold:.3e})")]
    Singular { pivot: f64, threshold: f64 },
    #[error("matrix exponential overflow: norm {norm:.3e} exceeds bound {bound:.3e}")]
    Overflow { norm: f64, bound: f64 },
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),
}

/// `‖A − A†‖_F ≤ tol` scaled by `n·‖A‖_F`.
pub fn is_hermitian(a: &CMatrix, tol: Tolerance) -> bool {
    hermitian_residual(a) <= tol.scaled(a)
}

pub fn hermitian_residual(a: &CMatrix) -> f64 {
    (a - &a.adjoint()).norm_fro()
}

/// Hermitian with smallest eigenvalue strictly above `tol.abs`.
pub fn is_positive_definite(a: &CMatrix, tol: Tolerance) -> bool {
    if !is_hermitian(a, tol) {
        return false;
    }
    match hermitian_eigen(a) {
        Ok((values, _)) => values.first().is_some_and(|&min| min > tol.abs),
        Err(_) => false,
    }
}
