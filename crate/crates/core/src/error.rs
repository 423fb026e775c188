//! Crate-wide error type.

use std::path::PathBuf;

use crate::pipeline::TraceEntry;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An assignment directory did not match the documented layout.
    #[error("failed to load assignment at {path}: {reason}")]
    Load { path: PathBuf, reason: String },

    /// The configured interpreter executable could not be spawned.
    #[error("interpreter not found: {0}")]
    InterpreterNotFound(String),

    /// The interpreter ran but behaved unexpectedly (for the oracles
    /// themselves, not for the student program under test).
    #[error("interpreter failure: {0}")]
    Interpreter(String),

    /// The completion backend gave up after exhausting its retries.
    #[error("backend request failed after {attempts} attempt(s): {last}")]
    Backend { attempts: u32, last: String },

    /// The mock backend had no fixture entry for a prompt.
    #[error("no fixture entry for prompt digest {0}")]
    FixtureMiss(String),

    /// A fixture or manifest file could not be read or parsed.
    #[error("bad fixture or manifest file {path}: {reason}")]
    BadFile { path: PathBuf, reason: String },

    /// A pipeline run aborted mid-flight; the partial trace is attached so
    /// callers can still inspect what happened up to the failure.
    #[error("{source}")]
    Aborted {
        #[source]
        source: Box<Error>,
        trace: Vec<TraceEntry>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps an error with the trace accumulated before it occurred.
    pub fn aborted(self, trace: Vec<TraceEntry>) -> Error {
        match self {
            // Already carries a trace; keep the innermost (fullest) one.
            Error::Aborted { .. } => self,
            other => Error::Aborted {
                source: Box::new(other),
                trace,
            },
        }
    }
}
