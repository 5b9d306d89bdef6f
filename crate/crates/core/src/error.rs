use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("a network needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("invalid channel parameters: {0}")]
    InvalidParams(String),
    #[error("node index {index} out of range 1..={n_nodes}")]
    NodeOutOfRange { index: usize, n_nodes: usize },
    #[error("link from node {0} to itself")]
    SelfLink(usize),
    #[error("probability {0} outside [0, 0.5]")]
    ProbabilityOutOfRange(f64),
    #[error("invalid route {route}: {reason}")]
    InvalidRoute { route: String, reason: String },
    #[error("cannot parse route {0:?}")]
    RouteParse(String),
    #[error("exhaustive enumeration is limited to {limit} nodes, got {n_nodes}")]
    EnumerationGuard { n_nodes: usize, limit: usize },
    #[error("{0} must not be empty")]
    Empty(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed topology document: {0}")]
    Topology(String),
}

pub type Result<T> = std::result::Result<T, Error>;
