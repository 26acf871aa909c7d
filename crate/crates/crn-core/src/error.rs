//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CrnError {
    /// Syntax error in the reaction DSL, with the 1-based source line.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A structurally invalid network or inconsistent indices.
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    /// Mismatched dimensions between a network and supplied parameters.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Input outside the mathematical domain (e.g. nonpositive concentration).
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed to converge or diverged.
    #[error("numerical failure: {0}")]
    Numerics(String),

    /// A guarded combinatorial sweep would exceed its size cap.
    #[error("size cap exceeded: {0}")]
    CapExceeded(String),
}
