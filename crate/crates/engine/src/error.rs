use std::io;
use std::path::PathBuf;

use lasagne_core::gat::GatError;
use lasagne_core::graph::GraphError;
use lasagne_core::lf::{LfError, ParseError, SortError};
use lasagne_core::linking::LinkError;
use lasagne_core::metrics::MetricError;
use lasagne_core::KgError;
use thiserror::Error;

use crate::generate::GenerateError;
use crate::pipeline::PipelineError;
use crate::templates::TemplateError;

/// Every failure the engine reports. Only [`EngineError::Io`] maps to exit
/// status 2; the rest are validation errors.
#[derive(Debug, Error)]
pub enum EngineError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Kg(#[from] KgError),
    #[error(transparent)]
    Lf(#[from] LfError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Gat(#[from] GatError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{0}")]
    Invalid(String),
}

impl EngineError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        EngineError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        EngineError::Format {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            EngineError::Io { .. } => 2,
            _ => 1,
        }
    }
}

impl From<ParseError> for EngineError {
    fn from(e: ParseError) -> Self {
        EngineError::Lf(e.into())
    }
}

impl From<SortError> for EngineError {
    fn from(e: SortError) -> Self {
        EngineError::Lf(e.into())
    }
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;
