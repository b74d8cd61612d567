//! Numerical methods whose inner accumulations go through a
//! [`SummationStrategy`](crate::summation::SummationStrategy) and are spread
//! over `P` logical workers.

mod jacobi;
mod lu;
mod matmul;
mod matrix;
mod power;
mod simpson;

use thiserror::Error;

use crate::summation::SumError;

pub use jacobi::jacobi_solve;
pub use lu::{lu_factorize, LuFactors};
pub use matmul::matmul;
pub use matrix::Matrix;
pub use power::{power_method, PowerOutcome};
pub use simpson::{simpson_integrate, Integrand};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("Simpson's rule needs an even subinterval count >= 2, got {0}")]
    OddSubintervalCount(usize),
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("zero pivot in row {row}")]
    ZeroPivot { row: usize },
    #[error("row {row} is not strictly diagonally dominant")]
    NotDiagonallyDominant { row: usize },
    #[error("eigenvalue estimate became zero at iteration {iteration}")]
    ZeroNormalizer { iteration: usize },
    #[error("non-finite matrix or vector entry")]
    NonFiniteInput,
    #[error(transparent)]
    Sum(#[from] SumError),
}

/// Result of an iterative method.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationOutcome<T> {
    pub solution: Vec<T>,
    /// Sweeps performed.
    pub iterations: usize,
    pub converged: bool,
    /// Max-norm of the last update (Jacobi) or `|Δλ|` of the last step (power method).
    pub final_residual: f64,
}
