use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid stream: {0}")]
    InvalidStream(String),

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("feature length mismatch: model expects {expected}, got {got}")]
    FeatureLength { expected: usize, got: usize },

    #[error("unknown physical activity `{0}`")]
    UnknownPhysicalActivity(String),

    #[error("unknown daily activity `{0}`")]
    UnknownDailyActivity(String),

    #[error("unknown compendium code {0}")]
    UnknownCode(u32),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("unsupported format: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable short name of the variant, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::Schema(_) => "schema",
            Error::InvalidStream(_) => "invalid-stream",
            Error::EmptyTrainingSet => "empty-training-set",
            Error::FeatureLength { .. } => "feature-length",
            Error::UnknownPhysicalActivity(_) => "unknown-physical-activity",
            Error::UnknownDailyActivity(_) => "unknown-daily-activity",
            Error::UnknownCode(_) => "unknown-code",
            Error::LengthMismatch(_) => "length-mismatch",
            Error::Parse { .. } => "parse",
            Error::Format(_) => "format",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, e: serde_json::Error) -> Self {
        Error::parse(path, e.line(), e.to_string())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
