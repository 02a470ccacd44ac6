use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty quality list")]
    EmptyQualityList,

    #[error("n exceeds feature count (n = {n}, features = {features})")]
    NExceedsFeatureCount { n: usize, features: usize },

    #[error("length mismatch: {what} ({expected} expected, {found} found)")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("parse error at row {row}, col {col}: {value:?}")]
    Parse { row: usize, col: usize, value: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("labels contain a single class")]
    SingleClass,

    #[error("labels required")]
    MissingLabels,

    #[error("gradient not supported by {0}")]
    GradientUnsupported(String),

    #[error("at least one foil required")]
    NoFoils,

    #[error("protected feature missing from dataset {0}")]
    MissingProtected(String),

    #[error("k = {k} exceeds candidate count {candidates}")]
    KExceedsCandidates { k: usize, candidates: usize },

    #[error("index {index} out of range for {what} of size {size}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("unknown generator kind {0:?}")]
    UnknownGenerator(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Name of the subsystem that raised the error, used in CLI diagnostics.
    pub fn module(&self) -> &'static str {
        match self {
            Error::EmptyQualityList
            | Error::NExceedsFeatureCount { .. }
            | Error::IndexOutOfRange { .. } => "core",
            Error::SchemaMismatch(_)
            | Error::Parse { .. }
            | Error::InvalidDataset(_)
            | Error::UnknownGenerator(_)
            | Error::Csv(_) => "data",
            Error::SingleClass
            | Error::MissingLabels
            | Error::NoFoils
            | Error::MissingProtected(_) => "models",
            Error::GradientUnsupported(_) => "explainers",
            Error::KExceedsCandidates { .. } => "axe",
            Error::LengthMismatch { .. } | Error::InvalidConfig(_) => "config",
            Error::Io(_) | Error::Json(_) => "io",
        }
    }
}
