use thiserror::Error;

/// Errors raised by graph handling, the solvers and the harness.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("kind violation: {0}")]
    KindViolation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("generation error: {0}")]
    Generation(String),

    #[error("budget exceeded: {what} needs {needed}, limit is {limit}")]
    BudgetExceeded {
        what: &'static str,
        needed: String,
        limit: String,
    },

    #[error("vertices {s} and {t} are not connected")]
    NotConnected { s: usize, t: usize },

    #[error("no progress: {0}")]
    NonProgress(String),

    #[error("destination sequence did not increase: {0}")]
    OrderViolation(String),

    #[error("no good influential string after {candidates} candidates")]
    NoGoodString { candidates: usize },

    #[error("runs produced outputs of different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable short name, used in run records.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "ParseError",
            Error::KindViolation(_) => "KindViolation",
            Error::Domain(_) => "DomainError",
            Error::Generation(_) => "GenerationError",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::NotConnected { .. } => "NotConnected",
            Error::NonProgress(_) => "NonProgress",
            Error::OrderViolation(_) => "OrderViolation",
            Error::NoGoodString { .. } => "NoGoodString",
            Error::LengthMismatch(..) => "LengthMismatch",
            Error::Io(_) => "IoError",
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn budget(what: &'static str, needed: impl ToString, limit: impl ToString) -> Self {
        Error::BudgetExceeded {
            what,
            needed: needed.to_string(),
            limit: limit.to_string(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
