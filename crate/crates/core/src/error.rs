use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid range [{l}, {r}] for {n} points")]
    InvalidRange { l: u32, r: u32, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("attribute at index {0} is not comparable")]
    NonComparable(usize),
    #[error("rank {0} is already a member of the graph")]
    DuplicateMember(u32),
    #[error("rank {0} is outside the dataset")]
    UnknownRank(u32),
    #[error("query range [{l}, {r}] is not anchored at the index side")]
    NotAnchored { l: u32, r: u32 },
    #[error("range holds {available} points, fewer than k = {k}")]
    TooFewInRange { available: usize, k: usize },
    #[error("invalid graph structure: {0}")]
    InvalidGraph(String),
}
