use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("misuse: {0}")]
    Misuse(String),
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("bracket could not be resolved: {0}")]
    Unresolved(String),
    #[error("bracket violated: {0}")]
    BracketViolation(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
