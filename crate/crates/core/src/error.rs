use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty document")]
    EmptyDocument,
    #[error("invalid vocabulary: {0}")]
    Vocabulary(String),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("paragraph strategy requires {0}")]
    MissingParagraphs(&'static str),
    #[error("no paragraphs found in training documents")]
    NoParagraphs,
    #[error("{path}:{line}: {msg}")]
    Dataset { path: PathBuf, line: usize, msg: String },
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported ENC1 version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated payload")]
    TruncatedPayload,
    #[error("duplicate encoding key ({doc_id}, {strategy}, {position_key})")]
    DuplicateKey {
        doc_id: String,
        strategy: String,
        position_key: String,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("malformed encoding file: {0}")]
    Malformed(String),
    #[error("infeasible corpus spec: {0}")]
    InfeasibleSpec(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("evaluation error: {0}")]
    Metrics(String),
    #[error("input mismatch: {0}")]
    Input(String),
    #[error(transparent)]
    Nn(#[from] nncore::NnError),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    RawIo(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Io {
            path: path.into(),
            source,
        })
    }
}
