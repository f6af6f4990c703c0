use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid Weierstrass data: {0}")]
    InvalidData(String),

    #[error("branch point: metric factor {factor:e} below {eps:e} near z = {re} + {im}i")]
    BranchPoint { factor: f64, eps: f64, re: f64, im: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge (residual {residual:e})")]
    NonConvergence { what: String, residual: f64 },

    #[error("insufficient resolution for {what}: disagreement {disagreement:e}")]
    Resolution { what: String, disagreement: f64 },
}

impl Error {
    pub(crate) fn no_conv(what: impl Into<String>, residual: f64) -> Self {
        Error::NonConvergence { what: what.into(), residual }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
