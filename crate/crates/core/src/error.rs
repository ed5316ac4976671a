use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("graph is disconnected: no path between {0} and {1}")]
    Disconnected(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid cut: {0}")]
    InvalidCut(String),
    #[error("not genus-0 embedding: V - E + F = {euler} (expected 2)")]
    NotPlanar { euler: i64 },
    #[error("invalid rotation system: {0}")]
    InvalidRotation(String),
    #[error("graph is not triangulated: face {0} has length {1}")]
    NotTriangulated(usize, usize),
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("route concatenation failed: {0}")]
    Concat(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("internal consistency error: {0}")]
    Consistency(String),
    #[error("lifting failed: {0}")]
    Lift(String),
}

pub type Result<T> = std::result::Result<T, Error>;
