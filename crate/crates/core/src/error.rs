use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state space of {configurations} configurations exceeds the enumeration cap of {cap}; use junction tree inference instead")]
    EnumerationCapExceeded { configurations: u128, cap: u64 },

    #[error("largest clique table has {cells} cells, exceeding the memory cap of {cap} (junction tree width {width})")]
    MemoryCapExceeded { cells: u128, cap: u64, width: usize },

    #[error("model has zero total mass")]
    DegenerateModel,

    #[error("non-finite loss at iteration {iteration}; step size is likely too large")]
    NonFiniteLoss { iteration: usize },

    #[error("complexity fit: {0}")]
    Complexity(String),

    #[error("knowledge database: {0}")]
    Schema(String),

    #[error("unresolved component: {0}")]
    Resolution(String),

    #[error("profiling: {0}")]
    Profiling(String),

    #[error("energy meter: {0}")]
    Meter(String),

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
