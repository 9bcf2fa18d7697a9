use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid or unreadable configuration.
    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("{path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    /// Library error with the file it came from, if any.
    #[error("{}{source}", context.as_ref().map(|c| format!("{c}: ")).unwrap_or_default())]
    Core {
        context: Option<String>,
        source: qsrgs_core::Error,
    },

    /// A check ran to completion and did not pass.
    #[error("{0}")]
    CheckFailed(String),

    /// Input that violates a hypothesis of the requested composition.
    #[error("theorem precondition failed: {0}")]
    Precondition(String),
}

impl From<qsrgs_core::Error> for CliError {
    fn from(source: qsrgs_core::Error) -> Self {
        CliError::Core { context: None, source }
    }
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// 1 internal or certification failure, 2 configuration, 3 theorem precondition.
    pub fn exit_code(&self) -> u8 {
        use qsrgs_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Read { .. } => 2,
            CliError::Write { .. } | CliError::CheckFailed(_) => 1,
            CliError::Precondition(_) => 3,
            CliError::Core { source, .. } => match source.root() {
                E::TheoremPrecondition(_) => 3,
                E::Parse { .. } | E::InvalidParameter(_) | E::Dimension(_) | E::NotSymmetric { .. } => 2,
                _ => 1,
            },
        }
    }
}

pub trait Context<T> {
    fn context(self, ctx: impl Into<String>) -> Result<T, CliError>;
}

impl<T> Context<T> for Result<T, qsrgs_core::Error> {
    fn context(self, ctx: impl Into<String>) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core {
            context: Some(ctx.into()),
            source,
        })
    }
}
