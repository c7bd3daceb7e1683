//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while loading data or running a solver.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data: edge lists, partition files, parameter values.
    #[error("invalid input: {0}")]
    Input(String),

    /// Parse failure in a text input, with the 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Configuration that cannot produce a meaningful run (bad time step,
    /// zero pivot in the implicit solve, impossible parameter combination).
    #[error("configuration error: {0}")]
    Config(String),

    /// The iterative eigensolver failed to reach the requested tolerance.
    #[error("eigensolver did not converge: best residual {residual:.3e} after {restarts} restarts")]
    Convergence { residual: f64, restarts: usize },

    /// Input whose structure makes the requested computation vacuous, e.g.
    /// an edgeless graph or an affinity matrix with no finite entry.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Relative score requested against a reference partition of zero energy.
    #[error("score undefined: reference partition has zero energy")]
    UndefinedScore,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
