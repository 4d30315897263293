use core::fmt;

/// Errors raised by the solver and its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid parameters rejected (odd or too small `n`, bad length, unsupported factors).
    InvalidGrid(&'static str),
    /// A field or spectrum carried a NaN or infinity at the given index.
    NonFinite { index: usize },
    /// Two objects that must share a grid do not.
    GridMismatch,
    /// An argument is outside the documented range.
    InvalidArgument(&'static str),
    /// The time stepper produced non-finite values.
    Instability { step: usize, t: f64 },
    /// The field leaks to the periodic boundary above the allowed ratio.
    BoundaryContamination { ratio: f64, limit: f64 },
    /// A requested snapshot lies outside the integration interval.
    SnapshotOutOfRange { t: f64 },
    /// Zero-mean data was required but `u_hat(0)` is not zero.
    NonZeroMean { value: f64 },
    /// Not enough Fourier modes for the jump stencil.
    InsufficientModes { n: usize, required: usize },
    /// A least-squares fit has no unique solution.
    DegenerateFit(&'static str),
    /// A trajectory does not cover the time span a diagnostic needs.
    InsufficientSpan { needed: f64, available: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            Error::NonFinite { index } => write!(f, "non-finite value at index {index}"),
            Error::GridMismatch => write!(f, "operands live on different grids"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Instability { step, t } => {
                write!(f, "numerical instability at step {step} (t = {t})")
            }
            Error::BoundaryContamination { ratio, limit } => {
                write!(f, "boundary contamination {ratio:e} exceeds limit {limit:e}")
            }
            Error::SnapshotOutOfRange { t } => write!(f, "snapshot time {t} outside run interval"),
            Error::NonZeroMean { value } => write!(f, "data is not mean-zero (|u_hat(0)| = {value:e})"),
            Error::InsufficientModes { n, required } => {
                write!(f, "grid has {n} modes, jump stencil needs at least {required}")
            }
            Error::DegenerateFit(msg) => write!(f, "degenerate fit: {msg}"),
            Error::InsufficientSpan { needed, available } => {
                write!(f, "trajectory covers {available} but {needed} is required")
            }
        }
    }
}

impl core::error::Error for Error {}
