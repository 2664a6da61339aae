use ebpred_core::EbError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Csv {
        path: String,
        line: u64,
        message: String,
    },
    #[error("{path}:{line}: expected {expected} fields, found {got}")]
    RaggedRows {
        path: String,
        line: u64,
        expected: usize,
        got: usize,
    },
    #[error("{path}:{line}:{column}: not a number: {cell:?}")]
    NonNumericCell {
        path: String,
        line: u64,
        column: usize,
        cell: String,
    },
    #[error("{0}")]
    Shape(String),
    #[error("{0}")]
    Config(String),
    #[error("input `{key}` ({path}) does not match the hash recorded in the manifest")]
    InputMismatch { key: String, path: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] EbError),
}

impl CliError {
    /// Stable identifier printed on the error line.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "IO_ERROR",
            CliError::Csv { .. } => "CSV_PARSE",
            CliError::RaggedRows { .. } => "RAGGED_ROWS",
            CliError::NonNumericCell { .. } => "NON_NUMERIC_CELL",
            CliError::Shape(_) => "BAD_SHAPE",
            CliError::Config(_) => "CONFIG_ERROR",
            CliError::InputMismatch { .. } => "INPUT_MISMATCH",
            CliError::Usage(_) => "USAGE",
            CliError::Core(e) => e.code(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}
