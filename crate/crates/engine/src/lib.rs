//! File formats, dataset generation, the linking-to-execution pipeline and
//! the `lasagne` command line, built on `lasagne-core`.

pub mod cli;
pub mod error;
pub mod generate;
pub mod io;
pub mod pipeline;
pub mod templates;

pub use error::{EngineError, Result};
