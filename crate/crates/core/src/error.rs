use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Gamma function pole at x = {0}")]
    Pole(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error("exponent m = {m} is at or below the global-existence threshold m* = {m_star}")]
    Threshold { m: f64, m_star: f64 },
    #[error("non-finite sample at t = {t}")]
    NonFinite { t: f64 },
    #[error("function is singular at the initial point and no weight was supplied")]
    SingularAtStart,
    #[error("step equation did not converge at t = {t} after {iterations} iterations")]
    NonConvergence { t: f64, iterations: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("integrability: {0}")]
    Integrability(String),
    #[error("geometry: {0}")]
    Geometry(String),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            field,
            reason: reason.into(),
        }
    }
}
