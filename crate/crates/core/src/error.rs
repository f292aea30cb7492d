use thiserror::Error;

/// Errors raised by graph construction, kernel evaluation and the clustering pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("vertex {vertex} has zero degree; enable unit self-loops or remove it")]
    IsolatedVertex { vertex: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("cluster {cluster} is empty")]
    EmptyCluster { cluster: usize },

    #[error("label {label} at position {position} is out of range for k = {k}")]
    LabelOutOfRange {
        position: usize,
        label: usize,
        k: usize,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("all points covered: total contribution is zero")]
    AllCovered,

    #[error("coreset vertex {vertex} has no kernel mass in the coreset graph; use sigma >= 1")]
    DegenerateCoresetVertex { vertex: usize },

    #[error("graph with {n} vertices exceeds the dense eigensolver limit of {limit}")]
    TooLargeForDense { n: usize, limit: usize },

    #[error("k-means failed to produce {k} nonempty clusters after {attempts} attempts")]
    KMeansFailed { k: usize, attempts: usize },

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Attributes this error to a named pipeline stage.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
