use std::path::PathBuf;

/// Failures of a CLI run, split by the exit code they map to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot read config file {path}: {source}")]
    ConfigFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Numerical(#[from] mocon_core::Error),
}

impl CliError {
    /// `1` for usage and configuration problems, `2` for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::ConfigFile { .. } => 1,
            CliError::Numerical(
                mocon_core::Error::InvalidInput(_) | mocon_core::Error::DimensionError(_) | mocon_core::Error::ResonantPlan(..),
            ) => 1,
            CliError::Numerical(_) | CliError::Output { .. } => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
