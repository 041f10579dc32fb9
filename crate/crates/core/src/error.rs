use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failure kinds shared by every module of the core.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A precondition on an argument (index, size, flag) was violated.
    InvalidArgument(String),
    /// Input values are non-finite or out of their documented range.
    InvalidData(String),
    /// Not enough samples for the requested fit.
    InsufficientData(String),
    /// A squeeze magnitude outside the representable range.
    Overflow(String),
    /// A metric has no defined value for the given input.
    UndefinedMetric(String),
    /// Some class has fewer samples than the requested number of folds.
    StratificationInfeasible(String),
    /// Training produced a non-finite loss or parameter.
    NumericFailure(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            Error::InvalidData(m) => write!(f, "invalid data: {m}"),
            Error::InsufficientData(m) => write!(f, "insufficient data: {m}"),
            Error::Overflow(m) => write!(f, "overflow guard: {m}"),
            Error::UndefinedMetric(m) => write!(f, "undefined metric: {m}"),
            Error::StratificationInfeasible(m) => write!(f, "stratification infeasible: {m}"),
            Error::NumericFailure(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl core::error::Error for Error {}

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
