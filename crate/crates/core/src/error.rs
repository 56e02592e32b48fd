//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} outside supported range 1..=20")]
    QubitCapacity(usize),

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitIndex { index: usize, n_qubits: usize },

    #[error("control and target of a CX gate must differ (both are {0})")]
    ControlEqualsTarget(usize),

    #[error("circuit acts on {circuit} qubits but state has {state}")]
    QubitCountMismatch { circuit: usize, state: usize },

    #[error("{what}: expected length {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid {what}: {details}")]
    InvalidArgument { what: &'static str, details: String },

    #[error("labels must be -1 or +1, found {0}")]
    InvalidLabel(f64),

    #[error("training data contains a single class; both classes are required")]
    SingleClass,

    #[error("kernel matrix is not symmetric (max |K_ij - K_ji| = {max_asymmetry:.3e})")]
    NonSymmetricKernel { max_asymmetry: f64 },

    #[error("input is empty")]
    EmptyInput,

    #[error("ROC AUC is undefined when only one class is present")]
    AucUndefined,

    #[error("class {label} has {count} members, too few to split")]
    ClassTooSmall { label: i32, count: usize },

    #[error("requested {requested} samples but only {available} are available")]
    SubsampleTooLarge { requested: usize, available: usize },

    #[error("gradient-based optimizer selected but no gradient was supplied")]
    GradientRequired,

    #[error("CSV file has no \"label\" column")]
    MissingLabelColumn,

    #[error("cannot parse cell at row {row}, column \"{column}\": {value:?}")]
    CsvCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("mixed label conventions: file contains both 0/1 and -1/+1 labels")]
    MixedLabelConventions,

    #[error("invalid experiment config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
