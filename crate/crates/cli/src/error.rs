use echo_core::EchoError;
use thiserror::Error;

/// Failure of a CLI run, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numeric(EchoError),
    #[error("{0}")]
    Fit(EchoError),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
            CliError::Fit(_) => 4,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config-invalid",
            CliError::Numeric(EchoError::Leakage { .. }) => "leakage-abort",
            CliError::Numeric(EchoError::Realization { source, .. }) if matches!(**source, EchoError::Leakage { .. }) => {
                "leakage-abort"
            }
            CliError::Numeric(_) => "numeric-abort",
            CliError::Io(_) => "io-error",
            CliError::Fit(EchoError::InsufficientDecay) => "insufficient-decay",
            CliError::Fit(_) => "fit-failure",
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.category(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

impl From<EchoError> for CliError {
    fn from(e: EchoError) -> Self {
        match e {
            EchoError::InvalidInput(_)
            | EchoError::GridTooCoarse(_)
            | EchoError::GridMismatch
            | EchoError::UnstableTimeStep { .. }
            | EchoError::SourceLength { .. } => CliError::Config(e.to_string()),
            EchoError::InsufficientDecay | EchoError::FloorDominated(_) | EchoError::MissingSeries(_) => {
                CliError::Fit(e)
            }
            EchoError::Io(m) => CliError::Io(m),
            _ => CliError::Numeric(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
