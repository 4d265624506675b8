use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A box with a degenerate or non-finite side.
    #[error("invalid window: {0}")]
    InvalidWindow(String),

    /// Points or windows of different dimensions were combined.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A coordinate was NaN or infinite.
    #[error("non-finite coordinate {value} in atom {atom}")]
    NonFiniteCoordinate { atom: usize, value: f64 },

    /// Quadrature is only implemented for boxes of dimension 1, 2 or 3.
    #[error("unsupported dimension {0}: quadrature supports d in 1..=3")]
    UnsupportedDimension(usize),

    /// Adaptive or tensor quadrature failed to reach its tolerance.
    #[error("quadrature did not converge to {tolerance:e}; refinement trace: {trace:?}")]
    QuadratureNotConverged { tolerance: f64, trace: Vec<f64> },

    /// The rejection envelope was below the density at a sampled point.
    #[error("density {value} at {point:?} exceeds the declared supremum {sup}")]
    EnvelopeViolation { point: Vec<f64>, value: f64, sup: f64 },

    /// A density, potential or mixer produced a negative or NaN value.
    #[error("invalid function value: {0}")]
    InvalidValue(String),

    /// An operation needing a positive total mass got zero.
    #[error("intensity measure has zero total mass")]
    ZeroMass,

    /// Input outside the operation's domain.
    #[error("undefined input: {0}")]
    UndefinedInput(String),

    /// A mixing distribution produced a non-positive intensity factor.
    #[error("mixer drew non-positive value {0}")]
    NonPositiveMixer(f64),

    /// The Gibbs rejection sampler gave up.
    #[error(
        "rejection sampling too hard: {accepted} accepted out of {proposals} proposals \
         (floor {floor:e})"
    )]
    RejectionTooHard { proposals: u64, accepted: u64, floor: f64 },

    /// A time change that is not strictly increasing, or with `U(0) != 0`.
    #[error("invalid time change: {0}")]
    InvalidTimeChange(String),

    /// Two algebraically equal routes disagreed beyond tolerance.
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    /// Transport problem with non-square input where square is required.
    #[error("cost matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },

    /// Assignment needs finite costs.
    #[error("cost matrix entry ({row}, {col}) is not finite")]
    InfiniteCost { row: usize, col: usize },

    /// Marginals do not sum to one or do not match the cost matrix.
    #[error("marginal mismatch: {0}")]
    MarginalMismatch(String),

    /// Truncated enumeration discards too much probability.
    #[error("truncation at {truncation} discards mass {discarded:e} (limit {limit:e})")]
    TruncationTooSmall {
        truncation: usize,
        discarded: f64,
        limit: f64,
    },

    /// A functional declared integer valued returned something else.
    #[error("functional value {0} is not an integer")]
    NotInteger(f64),

    /// Integer-valued functional ranged too widely for threshold summation.
    #[error("observed functional range [{min}, {max}] exceeds {limit} thresholds")]
    RangeTooWide { min: i64, max: i64, limit: usize },

    /// A probability estimate was degenerate where a ratio needs 0 < p < 1.
    #[error("degenerate event probability {0}")]
    DegenerateEvent(f64),

    /// Sampling option unsupported for this model.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Errors from user-supplied functionals.
    #[error("functional evaluation failed: {0}")]
    Functional(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
