use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("duplicate parameter name `{0}`")]
    DuplicateName(String),
    #[error("missing gradient for parameter `{0}`")]
    MissingGradient(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NnError>;

pub(crate) fn shape_err(op: &'static str, left: &[usize], right: &[usize]) -> NnError {
    NnError::Shape {
        op,
        left: left.to_vec(),
        right: right.to_vec(),
    }
}
