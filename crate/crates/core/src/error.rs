use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("FINDING: {0}")]
    Finding(String),
    #[error("rank-deficient system; dependent basis elements: {0:?}")]
    RankDeficient(Vec<String>),
    #[error("grazing contact with the switching curve at t={t}, x={x}, y={y}")]
    Grazing { t: f64, x: f64, y: f64 },
    #[error("integration failure: {0}")]
    Integration(String),
    #[error("no return to the section: {0}")]
    Escape(String),
    #[error("tolerance not reached: {0}")]
    Tolerance(String),
    #[error("internal consistency error: {0}")]
    Internal(String),
}

impl Error {
    pub fn is_finding(&self) -> bool {
        matches!(self, Error::Finding(_) | Error::Internal(_) | Error::RankDeficient(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
