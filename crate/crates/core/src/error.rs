use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector argument does not have the expected dimension.
    DimensionMismatch { expected: usize, found: usize },
    /// A parameter is outside the domain accepted by a constructor.
    InvalidParameter(String),
    /// `warmup = 0` was configured without an explicit initial estimate,
    /// or an initial estimate was supplied together with a warm-up phase.
    InitialEstimate(String),
    /// A sample with a NaN or infinite component.
    NonFiniteSample,
    /// The iterate left the divergence guard after update `n`.
    Diverged { n: u64 },
    /// The stream ended before the warm-up average could be formed.
    IncompleteWarmup { seen: usize, required: usize },
    /// Adaptive quadrature did not reach its tolerance.
    Quadrature { estimate: f64, error: f64, intervals: usize },
    /// A grid search found its maximum on the grid boundary.
    GridBoundary { axis: usize },
    /// An oracle was asked for something it does not support.
    Unsupported(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::InitialEstimate(msg) => write!(f, "initial estimate: {msg}"),
            Error::NonFiniteSample => f.write_str("sample has a non-finite component"),
            Error::Diverged { n } => write!(f, "estimate diverged at update {n}"),
            Error::IncompleteWarmup { seen, required } => write!(
                f,
                "stream ended during warm-up after {seen} of {required} samples"
            ),
            Error::Quadrature {
                estimate,
                error,
                intervals,
            } => write!(
                f,
                "quadrature did not converge: estimate {estimate:e}, error {error:e} after {intervals} intervals"
            ),
            Error::GridBoundary { axis } => {
                write!(f, "grid maximum lies on the boundary of axis {axis}; widen the grid")
            }
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<(), Error> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
