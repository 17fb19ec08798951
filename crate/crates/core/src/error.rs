use thiserror::Error;

pub type Result<T> = std::result::Result<T, TailError>;

#[derive(Debug, Error)]
pub enum TailError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("estimator undefined: {0}")]
    Undefined(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl TailError {
    /// Short machine-readable tag, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            TailError::Domain(_) => "domain",
            TailError::Undefined(_) => "undefined",
            TailError::InvalidSample(_) => "invalid_sample",
            TailError::Dimension { .. } => "dimension",
            TailError::RankDeficient(_) => "rank_deficient",
            TailError::Singular(_) => "singular",
            TailError::Config(_) => "config",
            TailError::Data(_) => "data",
            TailError::Io(_) => "io",
            TailError::Csv(_) => "csv",
            TailError::Json(_) => "json",
        }
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(TailError::Domain(msg.into()))
}
