use thiserror::Error;

/// Errors produced by the analysis and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series could not be evaluated (for example, an argument outside the
    /// region of convergence).
    #[error("series convergence error: {0}")]
    Convergence(String),

    /// Gauss-Legendre node doubling hit its cap before successive estimates agreed.
    #[error("quadrature did not converge: {what} (last {estimate:e}, previous {previous:e}, {nodes} nodes)")]
    Quadrature {
        what: String,
        estimate: f64,
        previous: f64,
        nodes: usize,
    },

    /// A precondition on a configuration or call sequence was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Bad user-facing input (unknown preset, malformed modulation name, ...).
    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;
