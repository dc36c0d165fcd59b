use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::clients::{ChatClient, PageFetcher, RetryPolicy, SearchClient};
use super::journal::Journal;
use super::stages::{
    engine_generate_qa, engine_parse, engine_search, engine_topics, page_title, EngineItem, EngineTuple, ParsedBlock,
    QaOutcome, TopicMap, LINKS_PER_TOPIC,
};
use super::EngineError;

pub struct EngineClients<'a> {
    pub chat: &'a dyn ChatClient,
    pub search: &'a dyn SearchClient,
    pub fetcher: &'a dyn PageFetcher,
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub links_per_topic: usize,
    pub retry: RetryPolicy,
    /// Stop after this many topics; for smoke runs.
    pub max_topics: Option<usize>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            links_per_topic: LINKS_PER_TOPIC,
            retry: RetryPolicy::default(),
            max_topics: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
enum PageResult {
    Parsed { title: String, blocks: Vec<ParsedBlock> },
    Failed { error: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EngineReport {
    pub topics: usize,
    pub pages: usize,
    pub failed_pages: usize,
    pub tuples: usize,
    pub items: Vec<EngineItem>,
    /// `(image url, reason)`
    pub rejections: Vec<(String, String)>,
}

/// Runs all four stages for `field`. Every client result is journaled
/// before use, so a rerun over the same journal makes no client calls for
/// finished steps.
pub fn run_engine(
    field: &str,
    clients: &EngineClients,
    cfg: &EngineConfig,
    journal: &mut Journal,
) -> Result<EngineReport, EngineError> {
    let topics: TopicMap = journal.step("topics", field, || engine_topics(field, clients.chat))?;
    let mut report = EngineReport::default();
    let mut seen_items: IndexMap<String, EngineItem> = IndexMap::new();
    let pairs = topics
        .iter()
        .flat_map(|(sub, ts)| ts.iter().map(move |t| (sub.as_str(), t.as_str())))
        .take(cfg.max_topics.unwrap_or(usize::MAX));
    for (subfield, topic) in pairs {
        report.topics += 1;
        let urls: Vec<String> = journal.step("search", topic, || {
            engine_search(topic, clients.search, cfg.links_per_topic, &cfg.retry)
        })?;
        for link in urls {
            let page: PageResult = journal.step("parse", &link, || {
                Ok(match cfg.retry.run(|| clients.fetcher.fetch(&link)) {
                    Ok(html) => PageResult::Parsed {
                        title: page_title(&html),
                        blocks: engine_parse(&html),
                    },
                    Err(e) => {
                        log::warn!("skipping {link}: {e}");
                        PageResult::Failed { error: e.to_string() }
                    }
                })
            })?;
            report.pages += 1;
            let (title, blocks) = match page {
                PageResult::Parsed { title, blocks } => (title, blocks),
                PageResult::Failed { .. } => {
                    report.failed_pages += 1;
                    continue;
                }
            };
            for block in blocks {
                for image in block.images {
                    report.tuples += 1;
                    let tuple = EngineTuple {
                        field: field.into(),
                        subfield: subfield.into(),
                        topic: topic.into(),
                        link: link.clone(),
                        title: title.clone(),
                        section: block.section.clone(),
                        text: block.text.clone(),
                        image,
                    };
                    let key = format!("{}#{}", tuple.link, tuple.image.url);
                    let outcome: QaOutcome = journal.step("generate", &key, || engine_generate_qa(&tuple, clients.chat))?;
                    match outcome {
                        QaOutcome::Accepted(item) => {
                            seen_items.entry(item.id.clone()).or_insert(*item);
                        }
                        QaOutcome::Rejected { reason } => report.rejections.push((tuple.image.url, reason)),
                    }
                }
            }
        }
    }
    report.items = seen_items.into_values().collect();
    Ok(report)
}
