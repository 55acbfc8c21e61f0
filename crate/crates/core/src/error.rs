use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the domain where a function is implemented.
    #[error("{func}: argument {arg} outside domain ({detail})")]
    Domain {
        func: &'static str,
        arg: f64,
        detail: &'static str,
    },

    /// A documented precondition on an operation was not met.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Two formal power series with different variables or truncation orders.
    #[error("series mismatch: {0}")]
    SeriesMismatch(String),

    /// A linear system is singular to working precision.
    #[error("singular system at t = {t} (sign {sign:+})")]
    Singular { t: f64, sign: i8 },

    /// A truncation tail could not be bounded below the requested tolerance.
    #[error("tail bound {bound:e} exceeds tolerance {tolerance:e}")]
    TailBound { bound: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(func: &'static str, arg: f64, detail: &'static str) -> Error {
    Error::Domain { func, arg, detail }
}
