use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid size {0} is invalid: need an even number of samples, at least 8")]
    InvalidGridSize(usize),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("elliptic parameter m = {0} outside [0, 1)")]
    EllipticDomain(f64),

    #[error("relative spacing s_alpha is not positive at node {index} (value {value})")]
    NonPositiveSpacing { index: usize, value: f64 },

    #[error("arclength is not strictly increasing at node {index}")]
    NonMonotoneArclength { index: usize },

    #[error("singular geometry: r = {r} at off-axis node {index}")]
    SingularGeometry { index: usize, r: f64 },

    #[error("geometry degeneracy: non-finite velocity kernel at node {index}")]
    GeometryDegenerate { index: usize },

    #[error("numerical abort at t = {t}: {reason}")]
    NumericalAbort { t: f64, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_param(ok: bool, name: &'static str, reason: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: reason.into(),
        })
    }
}
