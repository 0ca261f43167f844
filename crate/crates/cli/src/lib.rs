//! Command-line toolkit around `gdparse-core`: run configuration, the model
//! file format, training orchestration and the `gdparse` subcommands.

pub mod commands;
pub mod config;
pub mod iohelp;
pub mod model_file;
pub mod pipeline;
pub mod trainer;

use thiserror::Error;

use gdparse_core::corpus::CorpusError;
use gdparse_core::encoder::{DecodeError, EncodeError, LabelParseError};
use gdparse_core::eval::EvalError;
use gdparse_core::mtl::MtlError;

/// Toolkit errors, split by exit code: configuration problems exit with 2,
/// data problems with 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn config(message: impl std::fmt::Display) -> Self {
        CliError::Config(message.to_string())
    }

    pub fn data(message: impl std::fmt::Display) -> Self {
        CliError::Data(message.to_string())
    }

    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(err: CorpusError) -> Self {
        match err {
            CorpusError::BadRatios { .. } => CliError::config(err),
            _ => CliError::data(err),
        }
    }
}

impl From<MtlError> for CliError {
    fn from(err: MtlError) -> Self {
        match err {
            MtlError::EmptyCorpus { .. } | MtlError::ZeroBatchSize => CliError::config(err),
            _ => CliError::data(err),
        }
    }
}

impl From<EncodeError> for CliError {
    fn from(err: EncodeError) -> Self {
        CliError::data(err)
    }
}

impl From<DecodeError> for CliError {
    fn from(err: DecodeError) -> Self {
        CliError::data(err)
    }
}

impl From<LabelParseError> for CliError {
    fn from(err: LabelParseError) -> Self {
        CliError::data(err)
    }
}

impl From<EvalError> for CliError {
    fn from(err: EvalError) -> Self {
        CliError::data(err)
    }
}
