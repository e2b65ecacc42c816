use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("polynomial {poly:#b} is reducible: divisible by {factor:#b}")]
    ReduciblePolynomial { poly: u32, factor: u32 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: String, actual: String },

    #[error("matrix is singular")]
    Singular,

    #[error("system has no unique solution (rank {rank} < {unknowns} unknowns)")]
    NoUniqueSolution { rank: usize, unknowns: usize },

    #[error("linear system is inconsistent")]
    Inconsistent,

    #[error("insufficient data: {available} nodes supplied, at least {required} required")]
    InsufficientData { available: usize, required: usize },

    #[error("supplied nodes {nodes:?} do not determine the data")]
    Unrecoverable { nodes: Vec<usize> },

    #[error("no MDS code found after {tries} tries (last failing subset {last_witness:?})")]
    SearchFailure { tries: u64, last_witness: Vec<usize> },

    #[error("instance too large for exhaustive enumeration: {0}; use sampling instead")]
    TooLarge(String),

    #[error("repair plan integrity error: {0}")]
    PlanIntegrity(String),

    #[error("strategy {strategy} is not applicable: {reason}")]
    StrategyUnavailable { strategy: String, reason: String },

    #[error("missing read: node {node} rows {rows:?}")]
    MissingRead { node: usize, rows: Vec<usize> },

    #[error("checksum mismatch for shard {node} ({file})")]
    Corruption { node: usize, file: String },

    #[error("integrity failure: {0}")]
    Integrity(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error means stored data (or a plan derived from it) is
    /// inconsistent, as opposed to bad input or missing resources.
    pub fn is_integrity(&self) -> bool {
        matches!(
            self,
            Error::Corruption { .. }
                | Error::Integrity(_)
                | Error::PlanIntegrity(_)
                | Error::Inconsistent
        )
    }
}
