//! Error type shared by all audit operations.

use crate::simplex::QpSolution;

/// Errors raised while building ecosystems or running audits.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A sample set is too small to split or audit.
    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    /// An argument failed a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Matrix/vector dimensions do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// The simplex solver exhausted its iteration budget. Carries the best
    /// iterate found so callers can inspect how close it got.
    #[error("solver did not converge: kkt residual {kkt_residual:.3e} after {iterations} iterations")]
    SolverDidNotConverge {
        kkt_residual: f64,
        iterations: usize,
        best: Box<QpSolution>,
    },

    /// The feature matrix of a linear ecosystem is singular.
    #[error("design not identifiable: feature matrix is singular")]
    SingularDesign,

    /// A sampled passive design stayed rank-deficient after retries.
    #[error("rank-deficient sampled design after {0} attempts")]
    RankDeficientDesign(usize),

    /// Query planning needs a strictly positive uniqueness margin.
    #[error("margin must be positive for budget planning (got {0})")]
    NonPositiveMargin(f64),

    /// An anchor point lies outside its declared radii.
    #[error("anchor out of range: {0}")]
    AnchorOutOfRange(String),

    /// A coalition value is missing or non-finite.
    #[error("coalition game is incomplete: {0}")]
    IncompleteGame(String),
}
