//! Crate-wide error type.
//!
//! One enum serves every module: the variants mirror the failure modes of
//! constraint resolution, measure evaluation, and the solvers, so callers can
//! match on the condition they care about without juggling nested error
//! types.

use thiserror::Error;

/// Any failure produced by this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two constraints pin the same parameter to different values.
    #[error("contradictory constraints: {0}")]
    ContradictoryConstraints(String),
    /// A constraint references a parameter the space does not define.
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    /// A constraint references a move the space does not define.
    #[error("unknown move `{0}`")]
    UnknownMove(String),
    /// A free-parameter value lies outside [0,1] or yields a negative
    /// probability.
    #[error("parameter value out of range: {0}")]
    OutOfRangeParam(String),
    /// A constraint form the resolver does not support (e.g. fixing the
    /// normalization-eliminated member of a categorical group).
    #[error("unsupported constraint: {0}")]
    UnsupportedConstraint(String),
    /// Correlation is undefined because a marginal is degenerate.
    #[error("degenerate marginal: {0}")]
    DegenerateMarginal(String),
    /// Fisher information is singular: a surviving event has probability 0 at
    /// the evaluation point.
    #[error("singular Fisher information: {0}")]
    SingularFisher(String),
    /// Observed counts fall on an event the constrained space has pruned.
    #[error("count on pruned event: {0}")]
    CountOnPrunedEvent(String),
    /// The maximum-likelihood closed form does not apply to this space shape.
    #[error("ML estimate unsupported for this space: {0}")]
    MlUnsupported(String),
    /// Backwards induction requires sequential free nodes.
    #[error("free nodes are not sequential: {0}")]
    NonSequentialFreeNodes(String),
    /// Best-response enumeration limited to two free players / small blocks.
    #[error("unsupported game shape: {0}")]
    UnsupportedShape(String),
    /// No point of the search box satisfies the feasibility indicator.
    #[error("empty feasible set")]
    EmptyFeasibleSet,
    /// Catalog lookup failures.
    #[error("unknown game `{0}`")]
    UnknownGame(String),
    #[error("unknown space family `{0}`")]
    UnknownFamily(String),
    #[error("bad game parameters: {0}")]
    BadParams(String),
    /// Vector/point lengths disagree with the space dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// Malformed external input (JSON documents, CLI spec strings).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
