use thiserror::Error;

/// Errors raised by configuration validation and the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmbmError {
    #[error("modulation order {0} is not a power of two >= 2")]
    OrderNotPowerOfTwo(usize),
    #[error("QAM order {0} is not a perfect square")]
    NonSquareQam(usize),
    #[error("symbol energy must be positive (got {0})")]
    InvalidSymbolEnergy(f64),
    #[error("invalid value for `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("bit word has width {got}, expected {expected}")]
    WrongWordWidth { expected: u32, got: u32 },
    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("pilot must have unit energy (|p|^2 = {0})")]
    InvalidPilot(f64),
    #[error("negative argument: {0}")]
    Negative(f64),
    #[error("quadrature did not converge (estimated error {0:e})")]
    QuadratureDiverged(f64),
}

pub type Result<T> = std::result::Result<T, SmbmError>;
