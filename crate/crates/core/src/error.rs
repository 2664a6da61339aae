use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EbError {
    #[error("singular design: pivot {pivot:.3e} below tolerance at column {column}")]
    SingularDesign { column: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sigma^2 mode mismatch: {0}")]
    ModeMismatch(&'static str),

    #[error("model space too large to enumerate: {count} configurations (limit {limit})")]
    TooLarge { count: u128, limit: u128 },

    #[error("chain holds no states")]
    EmptyChain,

    #[error("need at least {required} draws, got {got}")]
    TooFewDraws { required: usize, got: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("invalid settings: {0}")]
    Config(String),

    #[error("replication {replication} (seed {seed}) failed: {source}")]
    Replication {
        replication: usize,
        seed: u64,
        #[source]
        source: Box<EbError>,
    },
}

impl EbError {
    /// Short machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            EbError::SingularDesign { .. } => "SINGULAR_DESIGN",
            EbError::DimensionMismatch { .. } => "DIMENSION_MISMATCH",
            EbError::ModeMismatch(_) => "MODE_MISMATCH",
            EbError::TooLarge { .. } => "TOO_LARGE",
            EbError::EmptyChain => "EMPTY_CHAIN",
            EbError::TooFewDraws { .. } => "TOO_FEW_DRAWS",
            EbError::InvalidData(_) => "INVALID_DATA",
            EbError::InvalidHyperParams(_) => "INVALID_HYPERPARAMS",
            EbError::InvalidConfiguration(_) => "INVALID_CONFIGURATION",
            EbError::Config(_) => "CONFIG_ERROR",
            EbError::Replication { .. } => "REPLICATION_FAILED",
        }
    }
}

pub type Result<T> = std::result::Result<T, EbError>;
