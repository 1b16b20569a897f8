use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("transport failure for prompt {fingerprint}: {message}")]
    Transport { fingerprint: String, message: String },
    #[error("protocol error for prompt {fingerprint}: {message}")]
    Protocol { fingerprint: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
