use thiserror::Error;

/// Broad classes of failure, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numeric,
    Precondition,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("context of order {got} is shorter than the required {needed}")]
    ContextTooShort { needed: usize, got: usize },

    #[error("index {index} is not representable: {reason}")]
    NotRepresentable { index: u64, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("scan exceeded its cap of {cap} steps")]
    ScanOverflow { cap: u64 },

    #[error("state space of {states} contexts exceeds the cap of {cap}")]
    StateSpaceTooLarge { states: u128, cap: u128 },

    #[error("kernel has a zero entry at context {context}")]
    ZeroEntry { context: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parameter(_) | Error::Parse(_) | Error::Json(_) | Error::Io(_) => {
                ErrorClass::Config
            }
            Error::ScanOverflow { .. }
            | Error::StateSpaceTooLarge { .. }
            | Error::Numeric(_)
            | Error::NotRepresentable { .. } => ErrorClass::Numeric,
            Error::ContextTooShort { .. } | Error::Precondition(_) | Error::ZeroEntry { .. } => {
                ErrorClass::Precondition
            }
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "Parameter",
            Error::ContextTooShort { .. } => "ContextTooShort",
            Error::NotRepresentable { .. } => "NotRepresentable",
            Error::Precondition(_) => "Precondition",
            Error::ScanOverflow { .. } => "ScanOverflow",
            Error::StateSpaceTooLarge { .. } => "StateSpaceTooLarge",
            Error::ZeroEntry { .. } => "ZeroEntry",
            Error::Numeric(_) => "Numeric",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
