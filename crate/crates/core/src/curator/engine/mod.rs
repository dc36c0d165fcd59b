//! Four-stage collection of web figures into VQA items: topics from a
//! chat model, links from search, figure/caption parsing, and Q&A
//! generation.

mod clients;
mod journal;
mod pipeline;
mod stages;

pub use clients::{ChatClient, ClientError, PageFetcher, Recording, Replay, RetryPolicy, SearchClient};
pub use journal::Journal;
pub use pipeline::{run_engine, EngineClients, EngineConfig, EngineReport};
pub use stages::{
    engine_generate_qa, engine_parse, engine_search, engine_topics, engine_topics_for, item_id, page_title,
    parse_topics, qa_prompt, topics_prompt, EngineItem, EngineTuple, ImageRef, ParsedBlock, QaOutcome, TopicMap,
    LINKS_PER_TOPIC, MIN_CONTEXT_WORDS,
};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("{stage}: malformed reply ({reason}); raw: {raw}")]
    Malformed {
        stage: &'static str,
        reason: String,
        raw: String,
    },
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("journal: {0}")]
    Journal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
