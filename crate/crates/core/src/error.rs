use thiserror::Error;

/// Errors produced by estimation, inference and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("instance does not match schema: {0}")]
    InstanceMismatch(String),

    #[error("cannot estimate prior from zero examples")]
    EmptyDataset,

    #[error("class {label:?} has no examples; conditional undefined")]
    EmptyClass { label: String },

    #[error("instance has zero probability under every class")]
    ZeroProbability,

    #[error("instance has zero marginal probability")]
    ZeroMarginal,

    #[error("joint table requires discrete features (feature {feature:?} is real)")]
    RealFeatureInJoint { feature: String },

    #[error("instance space of {size} cells exceeds the joint table bound of {bound} cells")]
    InstanceSpaceTooLarge { size: u128, bound: u64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty dataset")]
    EmptyFile,

    #[error("unsupported format_version {found} (expected {expected})")]
    FormatVersion { found: u64, expected: u64 },

    #[error("malformed container: {0}")]
    Container(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for the per-instance "no class can explain this row" failures that
    /// batch evaluation tallies instead of aborting on.
    pub fn is_undecidable(&self) -> bool {
        matches!(self, Error::ZeroProbability | Error::ZeroMarginal)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
