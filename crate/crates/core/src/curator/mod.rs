//! Instruction-data curation: per-source caps, category mixing, format
//! prompts, duplicate-image scanning and the web data engine.

mod dhash;
pub mod engine;
mod format;
mod leak;
mod mix;
mod pool;

pub use dhash::{decode_gray, dhash, dhash_bytes, dhash_file, hamming, to_hex};
pub use format::{attach_format_prompt, PromptRegistry};
pub use leak::{leakage_scan, thousands, LeakCell, LeakRow, LeakageReport, MatchMode, NamedHashes};
pub use mix::{default_ratios, mix_by_ratio, parse_ratios, CuratorConfig, MixOutcome};
pub use pool::{apply_threshold, cumulative_curve, elbow_index, Category, DataPool, PoolRecord};

/// Thresholds swept when studying per-source caps.
pub const THRESHOLD_SWEEP: [usize; 4] = [150_000, 250_000, 350_000, 450_000];

#[derive(Debug, thiserror::Error)]
pub enum CuratorError {
    #[error("data pool is empty")]
    EmptyPool,
    #[error("{0}")]
    Config(String),
    #[error("requested {requested} records but the pool holds {available}")]
    Infeasible { requested: usize, available: usize },
    #[error("category {0} has a positive ratio but no records")]
    MissingCategory(pool::Category),
    #[error("no format prompt registered for source {0:?}")]
    UnknownSource(String),
    #[error("image: {0}")]
    Image(String),
    #[error(transparent)]
    Num(#[from] crate::numcore::NumError),
    #[error(transparent)]
    Jsonl(#[from] crate::jsonl::JsonlError),
}

pub type Result<T> = std::result::Result<T, CuratorError>;
