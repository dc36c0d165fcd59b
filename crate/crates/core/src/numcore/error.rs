use thiserror::Error;

pub type Result<T> = std::result::Result<T, NumError>;

#[derive(Debug, Error)]
pub enum NumError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Dimension {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("invalid shape {shape:?}: {reason}")]
    Shape { shape: Vec<usize>, reason: String },
    #[error("{0}")]
    Invalid(String),
    #[error("non-finite value while evaluating parameter `{param}` (element {index})")]
    NonFinite { param: String, index: usize },
    #[error("backward requires a scalar output, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("tensor text format: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
