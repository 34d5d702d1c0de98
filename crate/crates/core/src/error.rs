use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("edge set contains a directed cycle through node {node}")]
    Cycle { node: usize },

    #[error("node index {index} out of range for {len} nodes")]
    Index { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("length mismatch: {left} vs {right}")]
    Length { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error(
        "augmentation frontier of {frontier} points exceeds the limit of {limit} \
         (reached variable {depth} of {total} in topological order)"
    )]
    Capacity {
        frontier: usize,
        limit: usize,
        depth: usize,
        total: usize,
    },

    #[error("every augmented point was pruned (variable {depth} of {total} in topological order)")]
    EmptyResult { depth: usize, total: usize },
}
