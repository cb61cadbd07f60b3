use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = LnsError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LnsError {
    #[error("empty input")]
    EmptyInput,

    #[error("'{ch}' at position {position} is not a digit in 1..9")]
    InvalidDigit { position: usize, ch: char },

    #[error("zero digit at position {position}")]
    ZeroDigit { position: usize },

    #[error("run of {length} at position {position} does not fit a single-digit count")]
    RunOverflow { position: usize, length: u64 },

    #[error("malformed run-length string: {0}")]
    MalformedRle(String),

    #[error("odd length {0}: cannot be read as (count, digit) pairs")]
    OddLength(usize),

    #[error("length {length} at step {step} exceeds the budget of {budget} digits")]
    LengthBudgetExceeded {
        step: usize,
        length: u64,
        budget: u64,
    },

    #[error("closure exceeded {limit} atoms")]
    ClosureBudgetExceeded { limit: usize },

    #[error("atom {atom:?} does not decay into its own listed products")]
    InexactDecay { atom: String },

    #[error(
        "power iteration did not converge after {iterations} iterations (last delta {delta:e})"
    )]
    NonConvergence { iterations: usize, delta: f64 },

    #[error("requested {requested} strings but only {available} distinct capped strings exist")]
    UniverseExhausted { requested: u64, available: String },

    #[error("invalid dataset spec: {0}")]
    InvalidSpec(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("gold has {gold} lines but predictions have {predicted}")]
    LineCountMismatch { gold: usize, predicted: usize },

    #[error("no prediction for source {0}")]
    MissingPrediction(String),

    #[error("more than one prediction for source {0}")]
    DuplicatePrediction(String),

    #[error("nothing to evaluate")]
    EmptyEvaluation,

    #[error("probe expects {expected} predictions, got {actual}")]
    ProbeLengthMismatch { expected: usize, actual: usize },
}

impl LnsError {
    /// Stable variant name, used by the command line for error reporting.
    pub fn name(&self) -> &'static str {
        match self {
            LnsError::EmptyInput => "EmptyInput",
            LnsError::InvalidDigit { .. } => "InvalidDigit",
            LnsError::ZeroDigit { .. } => "ZeroDigit",
            LnsError::RunOverflow { .. } => "RunOverflow",
            LnsError::MalformedRle(_) => "MalformedRle",
            LnsError::OddLength(_) => "OddLength",
            LnsError::LengthBudgetExceeded { .. } => "LengthBudgetExceeded",
            LnsError::ClosureBudgetExceeded { .. } => "ClosureBudgetExceeded",
            LnsError::InexactDecay { .. } => "InexactDecay",
            LnsError::NonConvergence { .. } => "NonConvergence",
            LnsError::UniverseExhausted { .. } => "UniverseExhausted",
            LnsError::InvalidSpec(_) => "InvalidSpec",
            LnsError::Io { .. } => "Io",
            LnsError::Parse { .. } => "Parse",
            LnsError::LineCountMismatch { .. } => "LineCountMismatch",
            LnsError::MissingPrediction(_) => "MissingPrediction",
            LnsError::DuplicatePrediction(_) => "DuplicatePrediction",
            LnsError::EmptyEvaluation => "EmptyEvaluation",
            LnsError::ProbeLengthMismatch { .. } => "ProbeLengthMismatch",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LnsError::Io {
            path: path.into(),
            source,
        }
    }
}
