use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: must lie in {bound}")]
    InvalidParam {
        name: &'static str,
        value: String,
        bound: &'static str,
    },

    #[error("site {site} outside {range}")]
    SiteOutOfRange { site: i64, range: String },

    #[error("absorbing state: total event rate is zero")]
    Absorbing,

    #[error("stability failure at t = {time}: value {value} left [0, 1] in cell {cell}")]
    Stability { time: f64, cell: usize, value: f64 },

    #[error("cfl = {0} is not below 1: the explicit scheme is unstable")]
    Cfl(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("test function class mismatch: {0}")]
    ClassMismatch(String),

    #[error("empty dictionary")]
    EmptyDictionary,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("unknown boundary condition `{0}`")]
    UnknownBoundary(String),
}

impl Error {
    /// True for failures of a numerical method (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Stability { .. } | Error::Cfl(_) | Error::Absorbing)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, value: impl ToString, bound: &'static str) -> Error {
    Error::InvalidParam {
        name,
        value: value.to_string(),
        bound,
    }
}
