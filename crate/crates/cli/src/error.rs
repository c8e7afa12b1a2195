use cascade_core::CascadeError;
use serde::Serialize;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("system failed validation: {0}")]
    Validation(String),

    #[error("{0}")]
    NonConvergence(String),

    #[error("runs are not comparable: {0}")]
    Incompatible(String),

    /// Engine audit failure; indicates a bug rather than bad input.
    #[error("{0}")]
    Internal(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Validation(_) => 3,
            CliError::NonConvergence(_) => 4,
            CliError::Incompatible(_) => 5,
            CliError::Internal(_) => 70,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Validation(_) => "validation",
            CliError::NonConvergence(_) => "non_convergence",
            CliError::Incompatible(_) => "incompatible_runs",
            CliError::Internal(_) => "internal",
        }
    }

    /// One-line JSON for standard error.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            error: &'a str,
            message: String,
            exit_code: i32,
        }
        serde_json::to_string(&Report {
            error: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        })
        .expect("plain data serializes")
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<CascadeError> for CliError {
    fn from(e: CascadeError) -> Self {
        match e {
            CascadeError::NonConvergence { .. } => CliError::NonConvergence(e.to_string()),
            CascadeError::AuditFailure { .. } => CliError::Internal(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
