use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0}")]
    Io(String),

    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("duplicate leaf label `{0}`")]
    DuplicateLabel(String),

    #[error("leaf label `{0}` is reserved")]
    ReservedLabel(String),

    #[error("tree has too few leaves")]
    TooFewLeaves,

    #[error("node of degree {0} is not allowed in a binary tree")]
    NonBinary(usize),

    #[error("unknown leaf label `{0}`")]
    UnknownLabel(String),

    #[error("no edge between nodes {0} and {1}")]
    NoSuchEdge(usize, usize),

    #[error("invalid regraft: {0}")]
    InvalidRegraft(&'static str),

    #[error("operation needs at least 4 leaves, tree has {0}")]
    TooSmall(usize),

    #[error("trees do not have the same leaf set")]
    LabelMismatch,

    #[error("forest is not an agreement forest of the input trees")]
    NotAnAgreementForest,

    #[error("forest is not an endpoint agreement forest: {0}")]
    NotAnEaf(&'static str),

    #[error("clause-graph vertex {0} has no incident edge")]
    UncoverableVertex(usize),

    #[error("instance with {0} leaves is too large for the exhaustive oracle")]
    TooLarge(usize),

    #[error("graph is not a forest")]
    Cyclic,

    #[error("{what} limit exceeded after {explored} trees; distance is at least {lower_bound}")]
    ResourceLimit {
        what: &'static str,
        lower_bound: usize,
        explored: u64,
    },
}
