use alloc::string::String;

/// Errors raised by the clustering engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("row {0} has zero norm")]
    ZeroNormRow(usize),
    #[error("invalid label {label} at index {index}")]
    InvalidLabel { index: usize, label: i64 },
    #[error("k = {k} exceeds n - 1 = {max}")]
    KTooLarge { k: usize, max: usize },
    #[error("unknown k-NN backend `{0}`")]
    UnknownBackend(String),
    #[error("invalid k-NN graph: {0}")]
    InvalidGraph(String),
    #[error("weighting k = {weighting} does not match graph k = {graph}")]
    WeightingMismatch { weighting: usize, graph: usize },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("pair uses the same index {0} twice")]
    SameIndex(usize),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("training set needs at least two classes")]
    SingleClass,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("centroid sampling failed after {attempts} attempts for class {class}")]
    CentroidSamplingFailed { class: usize, attempts: usize },
}

impl Error {
    /// Stable variant name for machine-readable reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidShape(_) => "InvalidShape",
            Error::NonFinite(_) => "NonFinite",
            Error::ZeroNormRow(_) => "ZeroNormRow",
            Error::InvalidLabel { .. } => "InvalidLabel",
            Error::KTooLarge { .. } => "KTooLarge",
            Error::UnknownBackend(_) => "UnknownBackend",
            Error::InvalidGraph(_) => "InvalidGraph",
            Error::WeightingMismatch { .. } => "WeightingMismatch",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::SameIndex(_) => "SameIndex",
            Error::DimMismatch { .. } => "DimMismatch",
            Error::SingleClass => "SingleClass",
            Error::EmptyTrainingSet => "EmptyTrainingSet",
            Error::NonFiniteLoss { .. } => "NonFiniteLoss",
            Error::ModelMismatch(_) => "ModelMismatch",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::CentroidSamplingFailed { .. } => "CentroidSamplingFailed",
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
