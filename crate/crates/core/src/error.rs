use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch for {what}: expected {expected}, got {actual}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("empty input for {0}")]
    EmptyInput(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("environment episode already finished; call reset before step")]
    EpisodeDone,

    #[error("action {action} out of range for action space of size {space}")]
    InvalidAction { action: usize, space: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("worker {worker_id} failed in round {round}: {source}")]
    WorkerFailed {
        worker_id: usize,
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed csv at {path} line {line}: {reason}")]
    Csv {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("toml parse error: {0}")]
    TomlParse(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
