use std::path::PathBuf;

/// Failures of the driver, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("config error: missing field `{0}`")]
    MissingField(&'static str),

    #[error("config error: field `{field}`: {reason}")]
    InvalidField { field: &'static str, reason: String },

    #[error("{context}: {source}")]
    Solver {
        context: String,
        #[source]
        source: stdg_core::Error,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("threshold check failed:\n{}", .0.join("\n"))]
    Threshold(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::MissingField(_) | CliError::InvalidField { .. } => 2,
            CliError::Solver { .. } => 3,
            CliError::Io { .. } => 1,
            CliError::Threshold(_) => 4,
        }
    }

    pub fn solver(context: impl Into<String>) -> impl FnOnce(stdg_core::Error) -> Self {
        let context = context.into();
        move |source| CliError::Solver { context, source }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
