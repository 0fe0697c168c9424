use thiserror::Error;

#[derive(Debug, Error)]
pub enum RqfError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("resource cap exceeded: {what} needs {requested} bytes, cap is {cap} bytes")]
    ResourceCap {
        what: &'static str,
        requested: u128,
        cap: u128,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RqfError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        RqfError::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        RqfError::Numerical(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            RqfError::InvalidInput(_) | RqfError::DimensionMismatch { .. } | RqfError::Config(_) => 2,
            RqfError::Numerical(_) => 3,
            RqfError::ResourceCap { .. } => 4,
            RqfError::Io(_) => 1,
        }
    }

    /// Short machine-readable tag for error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            RqfError::InvalidInput(_) => "invalid-input",
            RqfError::DimensionMismatch { .. } => "dimension-mismatch",
            RqfError::Numerical(_) => "numerical",
            RqfError::ResourceCap { .. } => "resource-cap",
            RqfError::Config(_) => "config",
            RqfError::Io(_) => "io",
        }
    }
}

pub type Result<T, E = RqfError> = std::result::Result<T, E>;
