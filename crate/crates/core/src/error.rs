//! Error type shared by every module of the engine.

use thiserror::Error;

/// Everything that can go wrong while parsing expressions, evaluating jets,
/// building frames, or running checks.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Malformed expression source. `offset` is the 1-based byte offset of the
    /// first token that could not be consumed.
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    /// An identifier that is neither a declared variable nor a known constant.
    #[error("unknown identifier \"{name}\"")]
    UnknownIdentifier { name: String },

    /// A call to a function the expression language does not define.
    #[error("unknown function \"{name}\"")]
    UnknownFunction { name: String },

    /// The exponent of `^` must not depend on any variable.
    #[error("non-constant exponent in `{expr}`")]
    NonConstExponent { expr: String },

    /// Evaluation left the domain of a primitive (log of a non-positive
    /// number, division by zero, ...). `location` prints the offending node.
    #[error("domain error: {message} in `{location}`")]
    Domain { message: String, location: String },

    /// A named constant was referenced but not bound at evaluation time.
    #[error("unbound constant \"{name}\"")]
    UnboundConstant { name: String },

    /// Operands with incompatible dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A symmetric solve hit a non-positive-definite pivot.
    #[error("singular metric: {0}")]
    SingularMetric(String),

    /// Candidate almost-product structure fails F^2 = I.
    #[error("invalid product structure: F^2 - I has residual {residual:.3e}")]
    InvalidProduct { residual: f64 },

    /// The Jacobian of the immersion dropped rank at a sampled point.
    #[error("degenerate immersion at point ({point}): Jacobian rank {rank} < {expected}")]
    DegenerateImmersion {
        point: String,
        rank: usize,
        expected: usize,
    },

    /// A field supplied as a normal field has a tangential component.
    #[error("not a normal field at point ({point}): tangential residual {residual:.3e}")]
    NotANormalField { point: String, residual: f64 },

    /// A direction handed to the slant-angle routine lies outside the
    /// distribution it was claimed to belong to.
    #[error("vector not in distribution \"{name}\": residual {residual:.3e}")]
    NotInDistribution { name: String, residual: f64 },

    /// A check was requested on a scenario that lacks the needed structure.
    #[error("precondition not met for {check}: {reason}")]
    PreconditionNotMet { check: String, reason: String },

    /// Scenario-level validation failure (bad section, key, or value).
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
