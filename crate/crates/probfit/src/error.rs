use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sufficient statistics kind mismatch: {left} vs {right}")]
    StatsKindMismatch {
        left: &'static str,
        right: &'static str,
    },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in data: {0}")]
    NonFiniteData(String),
    #[error("negative weight {0}")]
    NegativeWeight(f64),
    #[error("empty data source")]
    EmptySource,
    #[error("zero total weight")]
    ZeroTotalWeight,
    #[error("empty class {0}")]
    EmptyClass(usize),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: i64, classes: usize },
    #[error("class {0} has no labeled rows")]
    NoLabeledRows(usize),
    #[error("missing label column")]
    MissingLabels,
    #[error("category {index} out of range for {categories} categories")]
    CategoryOutOfRange { index: usize, categories: usize },
    #[error("zero-probability sample at row {0}")]
    ZeroProbabilitySample(usize),
    #[error("zero-probability sequence {0}")]
    ZeroProbabilitySequence(usize),
    #[error("empty sequence")]
    EmptySequence,
    #[error("k={k} exceeds the number of distinct rows ({distinct})")]
    TooFewDistinctRows { k: usize, distinct: usize },
    #[error("cycle detected in network structure")]
    CyclicStructure,
    #[error("value {value} out of range for variable {variable} (cardinality {cardinality})")]
    ValueOutOfRange {
        value: usize,
        variable: usize,
        cardinality: usize,
    },
    #[error("enumeration budget exceeded: {0} joint assignments")]
    EnumerationBudget(u128),
    #[error("contradictory evidence: zero total mass")]
    ContradictoryEvidence,
    #[error("covariance matrix is not positive definite after regularization")]
    NotPositiveDefinite,
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed model document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u64),
    #[error("unknown model type {0:?}")]
    UnknownModelType(String),
    #[error("invalid document: {0}")]
    InvalidDocument(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}
