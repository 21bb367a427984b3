//! The action grammar: tree representation, text form, sort checking and
//! execution against a [`KnowledgeGraph`](crate::KnowledgeGraph).

mod ast;
mod exec;
mod parse;
mod print;
mod typecheck;

pub use ast::{Action, ArgSlot, Hole, HoleKind, LfNode, Sort};
pub use exec::{compare, execute, merge_counts, ApproxPolicy, CountMap, EntitySet, ExecError, Value};
pub use parse::{parse_lf, ParseError};
pub use print::print_lf;
pub use typecheck::{typecheck, NodePath, SortError};

use thiserror::Error;

/// Any failure on the way from text to a value.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LfError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

impl From<SortError> for LfError {
    fn from(e: SortError) -> Self {
        LfError::Exec(ExecError::Sort(e))
    }
}
