use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = ScanError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("graph has no vertices")]
    EmptyGraph,

    #[error("duplicate edge ({0}, {1}) rejected")]
    DuplicateEdge(String, String),

    #[error("unsupported GML construct `{0}`")]
    UnsupportedGml(String),

    #[error("malformed GML: {0}")]
    Gml(String),

    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("observations have not been attached to the graph")]
    ObservationsUnset,

    #[error("neighborhood size k={k} is invalid for a graph with {n} vertices")]
    InvalidK { k: usize, n: usize },

    #[error("no admissible neighborhood: every component has fewer than {k} vertices")]
    NoAdmissibleNeighborhood { k: usize },

    #[error("vertex {root} reaches only {reachable} vertices, fewer than {m}")]
    InsufficientComponent {
        root: usize,
        reachable: usize,
        m: usize,
    },

    #[error("scan over an empty family")]
    EmptyFamily,

    #[error("variance needs at least two observations, got {0}")]
    TooFewObservations(usize),

    #[error("selection bound needs an almost-sure noise bound M (|ε_v| <= M)")]
    MissingNoiseBound,

    #[error("pairing needs an even number of samples, got {0}")]
    OddLength(usize),

    #[error("ground truth violates separation: {0}")]
    Separation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ScanError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ScanError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        ScanError::InvalidArgument(msg.into())
    }
}
