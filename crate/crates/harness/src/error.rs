use svgd_core::SvgdError;
use thiserror::Error;

/// Failures of a CLI invocation, each tied to a process exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("run diverged: {0}")]
    Divergence(String),

    #[error("audit failed: {0}")]
    Audit(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Other(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Divergence(_) => 3,
            HarnessError::Audit(_) => 4,
            HarnessError::Io { .. } | HarnessError::Other(_) => 1,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.as_ref().display().to_string(), source }
    }
}

impl From<SvgdError> for HarnessError {
    fn from(e: SvgdError) -> Self {
        match e {
            SvgdError::Divergence { .. } => HarnessError::Divergence(e.to_string()),
            SvgdError::Io(source) => HarnessError::Io { path: "<dataset>".into(), source },
            SvgdError::InvalidArgument(_)
            | SvgdError::DimensionMismatch { .. }
            | SvgdError::UnsupportedKernel(..)
            | SvgdError::Config(_)
            | SvgdError::Infeasible { .. }
            | SvgdError::Recenter { .. }
            | SvgdError::GradientAudit { .. }
            | SvgdError::Format { .. } => HarnessError::Config(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Other(format!("json: {e}"))
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Other(format!("csv: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
