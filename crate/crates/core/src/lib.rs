//! Core library for partitioning monotone-CNF syntactic-isomorphism instances
//! by hardness.
//!
//! The pieces, bottom to top:
//!
//! - [`cnf`]: formula data model, text format, renamings, and the
//!   renaming-invariant trivial signature.
//! - [`oracle`]: exact syntactic-isomorphism decision (trivial detector,
//!   pruned backtracking search, brute-force reference).
//! - [`generator`]: seeded construction of isomorphic / trivially
//!   non-isomorphic / non-trivially non-isomorphic pairs and dataset files.
//! - [`tokenizer`]: symbol-level token ids for formulas and formula pairs.
//! - [`model`]: a small transformer encoder with a dual-ordering pair head
//!   and hand-derived exact gradients.
//! - [`pipeline`]: phase-1 training, error relabeling, phase-2 training,
//!   threshold-swept evaluation, and curve export.
//! - [`dataset`]: the JSONL pair-sample file format shared by everything.

pub mod cnf;
pub mod dataset;
pub mod generator;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod tokenizer;

pub use cnf::{Category, Clause, Formula, PairSample, Renaming, Symbol, TrivialSignature};
pub use oracle::{OracleVerdict, TrivialReason};
