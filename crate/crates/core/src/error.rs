use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("basis size must be at least 1")]
    EmptyBasis,

    #[error("operands live on different bases")]
    BasisMismatch,

    #[error("coefficient vector has length {got}, basis has {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite coefficient at index {0}")]
    NonFinite(usize),

    #[error("rank {k} out of range 1..={n}")]
    RankOutOfRange { k: usize, n: usize },

    #[error("oversample factor must be at least 1")]
    BadOversample,

    #[error("grid has {got} values, expected {expected}")]
    GridSize { expected: usize, got: usize },

    #[error("operands use different r ({0} vs {1})")]
    MixedR(f64, f64),

    #[error("r = {r} must satisfy {lo} < r < {hi}")]
    ROutOfRange { r: f64, lo: f64, hi: f64 },

    #[error("exponent {name} = {value} must be > 1")]
    BadExponent { name: &'static str, value: f64 },

    #[error("dimension N = {0} is below 3; no critical hyperbola constraint applies")]
    DimensionTooSmall(u32),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
