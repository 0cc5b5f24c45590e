use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PpmError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("outcome column `{0}` not found")]
    MissingOutcome(String),

    #[error("outcome not binary: row {row} has value `{value}`")]
    OutcomeNotBinary { row: usize, value: String },

    #[error("non-numeric cell at row {row}, column `{column}`: `{value}`")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dataset too small: {0}")]
    TooSmall(String),

    #[error("undefined similarity: zero-norm vector")]
    UndefinedSimilarity,

    #[error("subpopulation size {m} out of range 1..={max}")]
    SubpopulationSize { m: usize, max: usize },

    #[error("degenerate outcome: positive-weight rows contain a single class")]
    DegenerateOutcome,

    #[error("weights must be nonnegative with a positive sum")]
    InvalidWeights,

    #[error("singular system in weighted logistic fit")]
    Singular,

    #[error("invalid prediction set: {0}")]
    InvalidPredictions(String),

    #[error("measure undefined: {0}")]
    Undefined(&'static str),

    #[error("all grid points are infeasible (viability floor {floor}, largest candidate {largest})")]
    AllInfeasible { floor: usize, largest: usize },

    #[error("validation unstable: {failed} of {total} bootstrap replicates failed")]
    ValidationUnstable { failed: usize, total: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = PpmError> = std::result::Result<T, E>;

impl PpmError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PpmError::Io {
            path: path.into(),
            source,
        }
    }
}
