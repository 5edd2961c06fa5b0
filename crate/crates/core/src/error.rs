use alloc::string::String;

/// Errors reported by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("all sampling scores are zero")]
    ZeroScores,
    #[error("size cap exceeded: {0}")]
    CapExceeded(String),
    #[error("recursion depth {depth} exceeds limit {limit}")]
    RecursionDepth { depth: usize, limit: usize },
    #[error("graph is not regular")]
    NonRegularGraph,
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$variant(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
