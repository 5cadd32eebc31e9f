use thiserror::Error;

/// Errors raised by the geometry, forcing, and solver routines.
///
/// Scalar payloads are widened to `f64` so the type does not depend on the
/// working precision.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "degenerate curvature: min(S_tt + S) = {margin:e} at index {index} (theta = {theta:.6})"
    )]
    DegenerateCurvature {
        margin: f64,
        index: usize,
        theta: f64,
    },

    #[error("non-convex input: {0}")]
    NonConvexInput(String),

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },

    #[error("invalid forcing context: {0}")]
    InvalidContext(String),

    #[error("forcing evaluated to {value} at index {index} (theta = {theta:.6})")]
    Evaluation {
        index: usize,
        theta: f64,
        value: f64,
    },

    #[error(
        "forcing derivative unsupported: {0}; use the matrix-free Jacobian of the steady solver"
    )]
    UnsupportedDerivative(String),

    #[error("non-finite state at t = {t}")]
    Blowup { t: f64 },
}

pub type Result<T, E = FlowError> = std::result::Result<T, E>;
