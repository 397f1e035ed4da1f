//! Scalars, small dense matrices and the matrix exponential.

mod expm;
mod matrix;
mod real;

pub use expm::{expm, MAX_EXPM_DIM};
pub use matrix::Matrix;
pub use real::{rational, rational_to_real, rational_to_sci, rational_to_real_pair, Extended, Precision, Real};

pub(crate) use real::pow2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix dimension {0} exceeds the supported maximum of {MAX_EXPM_DIM}")]
    TooLarge(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix exponential overflowed")]
    Overflow,
    #[error("singular linear system")]
    Singular,
}
