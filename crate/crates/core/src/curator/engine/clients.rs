use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use parking_lot::Mutex;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum ClientError {
    /// Worth retrying.
    #[error("transient: {0}")]
    Transient(String),
    /// The service answered but declined the request.
    #[error("refused: {0}")]
    Refused(String),
    /// A replay fixture has no entry for this request.
    #[error("no recorded response for {0:?}")]
    Missing(String),
    #[error("{0}")]
    Other(String),
}

/// Chat-completion endpoint: one prompt in, one text reply out.
pub trait ChatClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, ClientError>;
}

/// Web search returning result URLs, best first.
pub trait SearchClient: Send + Sync {
    fn search(&self, query: &str, k: usize) -> Result<Vec<String>, ClientError>;
}

/// Fetches a page body.
pub trait PageFetcher: Send + Sync {
    fn fetch(&self, url: &str) -> Result<String, ClientError>;
}

/// Serves canned responses keyed by the exact request string and counts
/// every call, answered or not.
#[derive(Debug, Default)]
pub struct Replay {
    responses: HashMap<String, Result<String, ClientError>>,
    /// Answers for any request whose key contains the pattern; checked
    /// after exact keys, in insertion order.
    contains: Vec<(String, Result<String, ClientError>)>,
    calls: AtomicUsize,
}

impl Replay {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: impl Into<String>, response: impl Into<String>) -> Self {
        self.responses.insert(key.into(), Ok(response.into()));
        self
    }

    pub fn with_error(mut self, key: impl Into<String>, err: ClientError) -> Self {
        self.responses.insert(key.into(), Err(err));
        self
    }

    pub fn when_contains(mut self, pattern: impl Into<String>, response: impl Into<String>) -> Self {
        self.contains.push((pattern.into(), Ok(response.into())));
        self
    }

    /// Loads `{"request": "response", ...}`.
    pub fn from_json(json: &str) -> Result<Self, ClientError> {
        let m: HashMap<String, String> =
            serde_json::from_str(json).map_err(|e| ClientError::Other(format!("replay fixture: {e}")))?;
        Ok(Self {
            responses: m.into_iter().map(|(k, v)| (k, Ok(v))).collect(),
            ..Self::default()
        })
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn answer(&self, key: &str) -> Result<String, ClientError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(r) = self.responses.get(key) {
            return r.clone();
        }
        self.contains
            .iter()
            .find(|(p, _)| key.contains(p.as_str()))
            .map(|(_, r)| r.clone())
            .unwrap_or_else(|| Err(ClientError::Missing(key.to_string())))
    }
}

impl ChatClient for Replay {
    fn complete(&self, prompt: &str) -> Result<String, ClientError> {
        self.answer(prompt)
    }
}

impl PageFetcher for Replay {
    fn fetch(&self, url: &str) -> Result<String, ClientError> {
        self.answer(url)
    }
}

/// Search replay: the stored response is a JSON array of URLs.
impl SearchClient for Replay {
    fn search(&self, query: &str, _k: usize) -> Result<Vec<String>, ClientError> {
        let raw = self.answer(query)?;
        serde_json::from_str(&raw).map_err(|e| ClientError::Other(format!("search fixture for {query:?}: {e}")))
    }
}

/// Wraps a live client and keeps every exchange so it can be saved as a
/// replay fixture.
pub struct Recording<C> {
    inner: C,
    log: Mutex<Vec<(String, String)>>,
}

impl<C> Recording<C> {
    pub fn new(inner: C) -> Self {
        Self {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn to_json(&self) -> String {
        let m: HashMap<String, String> = self.log.lock().iter().cloned().collect();
        serde_json::to_string_pretty(&m).expect("string map serializes")
    }
}

impl<C: ChatClient> ChatClient for Recording<C> {
    fn complete(&self, prompt: &str) -> Result<String, ClientError> {
        let r = self.inner.complete(prompt)?;
        self.log.lock().push((prompt.to_string(), r.clone()));
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    /// Total tries including the first.
    pub attempts: u32,
    pub backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            backoff: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn immediate(attempts: u32) -> Self {
        Self {
            attempts,
            backoff: Duration::ZERO,
        }
    }

    /// Retries transient failures with linear backoff.
    pub fn run<T>(&self, mut f: impl FnMut() -> Result<T, ClientError>) -> Result<T, ClientError> {
        let mut tries = 0;
        loop {
            tries += 1;
            match f() {
                Err(ClientError::Transient(msg)) if tries < self.attempts.max(1) => {
                    log::warn!("transient failure (try {tries}): {msg}");
                    std::thread::sleep(self.backoff * tries);
                }
                other => return other,
            }
        }
    }
}
