use std::path::PathBuf;
use std::process::ExitCode;

use polarity_core::coupling::CouplingError;
use polarity_core::market_data::{CacheError, IngestError};
use polarity_core::polarity::PolarityError;
use polarity_core::synth::SynthError;
use polarity_core::tailfit::FitError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Data(_) => "data",
            CliError::Numeric(_) => "numeric",
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Data(_) => 4,
            CliError::Numeric(_) => 5,
        })
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io { path, source } => CliError::Io { path: path.unwrap_or_default(), source },
            IngestError::Cache(c) => c.into(),
            IngestError::Schema(m) => CliError::Config(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<CacheError> for CliError {
    fn from(e: CacheError) -> Self {
        match e {
            CacheError::Io(source) => CliError::Io { path: PathBuf::new(), source },
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<PolarityError> for CliError {
    fn from(e: PolarityError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<CouplingError> for CliError {
    fn from(e: CouplingError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Io { path, source } => CliError::Io { path, source },
            other => CliError::Config(other.to_string()),
        }
    }
}
