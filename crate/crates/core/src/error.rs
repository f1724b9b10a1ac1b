use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("degree matrix has a non-positive diagonal entry at index {index}")]
    DegenerateDegree { index: usize },

    #[error("requested {requested} eigenpairs but only {available} lie above the deflation threshold")]
    InsufficientSpectrum { requested: usize, available: usize },

    #[error("eigensolver did not converge: {0}")]
    Convergence(String),

    #[error("pencil has no finite eigenvalue (G is zero)")]
    DegeneratePencil,

    #[error("no eigenpair passed residual certification (best residual {best_residual:e}, tolerance {tolerance:e})")]
    NoEigenpair { best_residual: f64, tolerance: f64 },

    #[error("at least {required} samples are required, got {got}")]
    InsufficientSamples { required: usize, got: usize },

    #[error("sample {index} has no neighbours with positive weight")]
    IsolatedSample { index: usize },

    #[error("vector has zero D-norm")]
    DegenerateVector,

    #[error("labels must contain both classes")]
    DegenerateSupervision,

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("no scaling factors could be learned: {0}")]
    NoScaling(Box<Error>),

    #[error("no certified eigenvector has a normalizable final component")]
    NonNormalizable,

    #[error("training set is empty")]
    EmptyTraining,

    #[error("labels are not binary: found {distinct} distinct values")]
    NonBinaryLabels { distinct: usize },

    #[error("feature '{feature}' has zero variance")]
    ZeroVariance { feature: String },

    #[error("labels contain only class {class}")]
    SingleClass { class: u32 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NonFinite(_) => "non_finite",
            Error::NotSymmetric { .. } => "not_symmetric",
            Error::DegenerateDegree { .. } => "degenerate_degree",
            Error::InsufficientSpectrum { .. } => "insufficient_spectrum",
            Error::Convergence(_) => "convergence",
            Error::DegeneratePencil => "degenerate_pencil",
            Error::NoEigenpair { .. } => "no_eigenpair",
            Error::InsufficientSamples { .. } => "insufficient_samples",
            Error::IsolatedSample { .. } => "isolated_sample",
            Error::DegenerateVector => "degenerate_vector",
            Error::DegenerateSupervision => "degenerate_supervision",
            Error::InternalConsistency(_) => "internal_consistency",
            Error::NoScaling(_) => "no_scaling",
            Error::NonNormalizable => "non_normalizable",
            Error::EmptyTraining => "empty_training",
            Error::NonBinaryLabels { .. } => "non_binary_labels",
            Error::ZeroVariance { .. } => "zero_variance",
            Error::SingleClass { .. } => "single_class",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
