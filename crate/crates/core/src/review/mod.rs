//! Human review loop for generated benchmark items: decisions, the
//! decision journal and the in-memory store served over HTTP.

mod decision;
mod journal;
mod store;

pub use decision::{Decision, DecisionRecord, Edits};
pub use journal::DecisionJournal;
pub use store::{Ack, ExportBundle, ExportMeta, Page, ReviewStore, Stats, MAX_PAGE_SIZE};

use crate::jsonl::JsonlError;

#[derive(Debug, thiserror::Error)]
pub enum ReviewError {
    #[error("unknown item {0}")]
    NotFound(String),
    #[error("invalid decision: {0}")]
    Validation(String),
    #[error("bad page request: {0}")]
    BadPage(String),
    #[error("{count} items are still pending")]
    Pending { count: usize },
    #[error("item id {0} appears more than once")]
    DuplicateItem(String),
    #[error("journal: {0}")]
    Journal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

pub type Result<T> = std::result::Result<T, ReviewError>;
