//! Replay clients for offline data-engine runs.

use std::collections::HashMap;
use std::path::Path;

use anyhow::Context;
use serde::Deserialize;

use forge_core::curator::engine::Replay;

/// Replay fixtures for the three engine clients, keyed by exact request.
#[derive(Debug, Default, Deserialize)]
pub struct EngineFixture {
    #[serde(default)]
    pub chat: HashMap<String, String>,
    /// Values are JSON arrays of URLs, as strings.
    #[serde(default)]
    pub search: HashMap<String, String>,
    #[serde(default)]
    pub fetch: HashMap<String, String>,
}

pub struct MockClients {
    pub chat: Replay,
    pub search: Replay,
    pub fetcher: Replay,
}

fn replay(map: HashMap<String, String>) -> Replay {
    map.into_iter().fold(Replay::new(), |r, (k, v)| r.with(k, v))
}

impl MockClients {
    pub fn from_fixture(f: EngineFixture) -> Self {
        Self {
            chat: replay(f.chat),
            search: replay(f.search),
            fetcher: replay(f.fetch),
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> anyhow::Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let f: EngineFixture = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(Self::from_fixture(f))
    }

    /// Canned answers for any field: two topics, two pages each, one figure
    /// per page with enough surrounding text to pass the context filter.
    pub fn demo(field: &str) -> Self {
        let topics = format!(r#"{{"General {field}": ["{field} topic one", "{field} topic two"]}}"#);
        let chat = Replay::new()
            .when_contains("List the main subfields of", topics)
            .when_contains(
                "visual question-answer pairs",
                r#"{"question": "What quantity does the plotted curve show?", "answer": "It shows the measured value over time."}"#,
            );
        let slug = |t: &str| t.replace(' ', "_");
        let filler = "The figure summarises a standard laboratory measurement and the quantities that are recorded \
                      during the experiment, including the apparatus, the procedure followed by the students, the \
                      sources of error, and the way in which the readings are tabulated, plotted and interpreted \
                      before a conclusion about the underlying physical law is drawn from the data.";
        let mut search = Replay::new();
        let mut fetcher = Replay::new();
        for t in ["topic one", "topic two"] {
            let q = format!("{field} {t}");
            let pages = [slug(&q), format!("{}_overview", slug(&q))];
            let urls: Vec<String> = pages.iter().map(|p| format!("https://example.org/wiki/{p}")).collect();
            let mut listed = urls.clone();
            listed.push("http://insecure.example.org/skip".into());
            search = search.with(q, serde_json::to_string(&listed).expect("strings serialize"));
            for (url, page) in urls.iter().zip(&pages) {
                fetcher = fetcher.with(
                    url.clone(),
                    format!(
                        "<html><head><title>{page}</title></head><body><h2>Measurement</h2><p>{filler}</p>\
                         <figure><img src=\"//upload.example.org/{page}.png\"><figcaption>{page} diagram</figcaption></figure>\
                         </body></html>"
                    ),
                );
            }
        }
        Self {
            chat,
            search,
            fetcher,
        }
    }
}
