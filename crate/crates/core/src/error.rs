use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not subcritical: beta + 2 gamma = {sum} >= 1 (beta = {beta}, gamma = {gamma})")]
    NotSubcritical { beta: f64, gamma: f64, sum: f64 },

    #[error("vertex {vertex} out of range 1..={n}")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("pair ({0}, {0}) has no edge probability in a simple variant")]
    SelfPair(usize),

    #[error("{what}: size {size} exceeds exact cap {cap}")]
    CapExceeded { what: &'static str, size: usize, cap: usize },

    #[error("branching process exceeded the size guard of {limit} nodes")]
    SizeGuard { limit: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{censored} of {reps} replicates reached the horizon")]
    Censored { censored: usize, reps: usize },

    #[error("graph is not connected on the requested vertex set")]
    Disconnected,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
