//! Pure algorithmic core of the logical-form engine.
//!
//! Everything here works on in-memory values only: the knowledge graph
//! indexes, the action grammar and its executor, deterministic entity
//! linking, the type–predicate graph with its attention math, and the loss
//! and metric utilities. File formats, dataset generation and the command
//! line live in the `lasagne-engine` crate.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! turned off.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod gat;
pub mod graph;
pub mod kg;
pub mod lf;
pub mod linking;
pub mod matrix;
pub mod metrics;
pub mod objectives;
mod symbol;

pub use kg::{KgError, KnowledgeGraph, KnowledgeGraphBuilder, Triple};
pub use lf::{Action, ApproxPolicy, LfError, LfNode, Sort, Value};
pub use symbol::Symbol;
