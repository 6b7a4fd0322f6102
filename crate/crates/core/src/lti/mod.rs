//! Linear time-invariant system representations: real polynomials, SISO
//! transfer functions, and state-space realizations, plus the conversions
//! between them and the pole/zero bookkeeping used by the dominance tests.

mod polynomial;
mod statespace;
mod transfer;

pub use polynomial::Polynomial;
pub use statespace::{tf_from_statespace, StateSpace};
pub use transfer::{
    default_boundary_tol, pole_zero_split, poly_roots, PoleZeroSplit, TransferFunction,
};

use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum LtiError {
    #[error("denominator polynomial is identically zero")]
    ZeroDenominator,
    #[error("the zero polynomial has no roots")]
    ZeroPolynomial,
    #[error("coefficients must be finite")]
    NonFinite,
    #[error("evaluation at s = {s} hits a pole (|den(s)| below tolerance)")]
    EvaluationAtPole { s: Complex64 },
    #[error("operation requires a SISO system, got {inputs} inputs and {outputs} outputs")]
    NotSiso { inputs: usize, outputs: usize },
    #[error("transfer function is improper: numerator degree {num_degree} exceeds denominator degree {den_degree}")]
    Improper {
        num_degree: usize,
        den_degree: usize,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
