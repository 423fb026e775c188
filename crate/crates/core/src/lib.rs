//! Repair engine for introductory Python assignments.
//!
//! The engine fixes both syntactic and semantic mistakes in small Python
//! programs. A buggy program first passes through a syntax phase that
//! extracts the error-enclosing chunk, asks a completion backend for fixes,
//! and merges accepted fixes back. Syntactically valid candidates then enter
//! a semantic phase that ensembles several prompt structures (optionally
//! with few-shot examples mined from peer histories), validates every
//! generation against the instructor's test suite, and finally returns the
//! passing candidate with the smallest token edit distance to the original
//! program.

pub mod assignment;
pub mod bench;
pub mod chunk;
pub mod error;
pub mod fewshot;
pub mod gateway;
pub mod oracle;
pub mod pipeline;
pub mod prompt;
pub mod token;

pub use error::{Error, Result};
