use thiserror::Error;

use crate::numcore::NumError;

pub type Result<T> = std::result::Result<T, SvaError>;

#[derive(Debug, Error)]
pub enum SvaError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("encoder {k}: {reason}")]
    Encoder { k: usize, reason: String },
    #[error("parameter {name}: {reason}")]
    Param { name: String, reason: String },
    #[error("query position ({i}, {j}) outside the {side}x{side} grid")]
    OutOfRange { i: usize, j: usize, side: usize },
    #[error("visual span has {got} rows, expected {expected}")]
    Span { got: usize, expected: usize },
    #[error("attention log is empty")]
    EmptyLog,
    #[error(transparent)]
    Num(#[from] NumError),
}
