use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An operation that divides by `p_i + p_d` was called with both zero.
    #[error("degenerate channel parameters: p_i + p_d must be positive")]
    DegenerateParams,

    /// A probability argument fell outside `[0, 1]` beyond tolerance.
    #[error("value {0} is not a probability in [0, 1]")]
    InvalidProbability(f64),

    /// A packed block does not fit the declared block length.
    #[error("block 0x{block:x} does not fit in {len} bits")]
    LengthMismatch { block: u64, len: usize },

    /// An exact-enumeration operation was called beyond its size guard.
    #[error("enumeration guard exceeded: {0}")]
    SizeGuard(String),

    /// Conditional entropy was asked for an impossible prefix split.
    #[error("invalid split index {split} for block length {len}")]
    InvalidSplit { split: usize, len: usize },

    /// A probability vector is not normalized or carries negative mass.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// An evaluation point violates its feasibility constraints.
    #[error("infeasible point: {0}")]
    InfeasiblePoint(String),

    /// An iterative solver stopped before reaching its tolerance.
    #[error("solver did not converge: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
