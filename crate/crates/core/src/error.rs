use alloc::string::String;
use core::fmt;

/// Errors raised by the library.
///
/// Everything here is a caller mistake of one kind or another; operations on
/// validated inputs do not fail.  When a precondition fails the operation
/// raises instead of silently reporting a meaningless result.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A distribution failed validation (negative mass, bad normalization,
    /// unsorted or duplicated support points, wrong dense length, ...).
    InvalidDistribution(String),
    /// Two distributions live on different domains.
    DimensionMismatch { left: u32, right: u32 },
    /// A parameter is outside its documented range or otherwise unusable.
    InvalidParameter(String),
    /// A stated precondition of the operation does not hold for the inputs.
    PreconditionViolated(String),
    /// The requested value exists but cannot be represented / reached
    /// (e.g. a slice count that would exceed the domain).
    OutOfRange(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDistribution(msg) => write!(f, "invalid distribution: {msg}"),
            Error::DimensionMismatch { left, right } => {
                write!(f, "domain mismatch: n={left} vs n={right}")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::PreconditionViolated(msg) => write!(f, "precondition violated: {msg}"),
            Error::OutOfRange(msg) => write!(f, "out of range: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
