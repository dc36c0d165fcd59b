//! Blocking HTTP clients for the data engine and the LLM grader.
//!
//! The chat client speaks the common `chat/completions` JSON shape.
//! Configuration comes from the environment:
//!
//! - `FORGE_CHAT_API_KEY` (required)
//! - `FORGE_CHAT_URL`, default `https://api.openai.com/v1/chat/completions`
//! - `FORGE_CHAT_MODEL`, default `gpt-4o-mini`
//! - `FORGE_SEARCH_URL`: endpoint taking `?q=<query>&k=<n>` and returning a
//!   JSON array of result URLs

use std::time::Duration;

use anyhow::{anyhow, Context};
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use forge_core::curator::engine::{ChatClient, ClientError, PageFetcher, SearchClient};

pub const API_KEY_ENV: &str = "FORGE_CHAT_API_KEY";
pub const CHAT_URL_ENV: &str = "FORGE_CHAT_URL";
pub const CHAT_MODEL_ENV: &str = "FORGE_CHAT_MODEL";
pub const SEARCH_URL_ENV: &str = "FORGE_SEARCH_URL";

const DEFAULT_CHAT_URL: &str = "https://api.openai.com/v1/chat/completions";
const DEFAULT_MODEL: &str = "gpt-4o-mini";

fn http() -> Client {
    Client::builder()
        .timeout(Duration::from_secs(120))
        .build()
        .expect("http client builds")
}

fn classify(status: StatusCode, body: String) -> ClientError {
    if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
        ClientError::Transient(format!("{status}: {body}"))
    } else {
        ClientError::Other(format!("{status}: {body}"))
    }
}

fn transport(e: reqwest::Error) -> ClientError {
    if e.is_timeout() || e.is_connect() {
        ClientError::Transient(e.to_string())
    } else {
        ClientError::Other(e.to_string())
    }
}

pub struct HttpChat {
    client: Client,
    url: String,
    key: String,
    model: String,
}

impl HttpChat {
    pub fn from_env() -> anyhow::Result<Self> {
        let key = std::env::var(API_KEY_ENV).with_context(|| format!("{API_KEY_ENV} is not set; use --mock for offline runs"))?;
        Ok(Self {
            client: http(),
            url: std::env::var(CHAT_URL_ENV).unwrap_or_else(|_| DEFAULT_CHAT_URL.into()),
            key,
            model: std::env::var(CHAT_MODEL_ENV).unwrap_or_else(|_| DEFAULT_MODEL.into()),
        })
    }
}

impl ChatClient for HttpChat {
    fn complete(&self, prompt: &str) -> Result<String, ClientError> {
        let body = json!({
            "model": self.model,
            "temperature": 0,
            "messages": [{"role": "user", "content": prompt}],
        });
        let resp = self
            .client
            .post(&self.url)
            .bearer_auth(&self.key)
            .json(&body)
            .send()
            .map_err(transport)?;
        let status = resp.status();
        let text = resp.text().map_err(transport)?;
        if !status.is_success() {
            return Err(classify(status, text));
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| ClientError::Other(format!("chat reply: {e}")))?;
        let choice = &v["choices"][0];
        if choice["finish_reason"] == "content_filter" {
            return Err(ClientError::Refused("content filter".into()));
        }
        if let Some(r) = choice["message"]["refusal"].as_str() {
            return Err(ClientError::Refused(r.into()));
        }
        choice["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ClientError::Other(format!("chat reply has no content: {text}")))
    }
}

pub struct HttpFetcher {
    client: Client,
}

impl Default for HttpFetcher {
    fn default() -> Self {
        Self { client: http() }
    }
}

impl PageFetcher for HttpFetcher {
    fn fetch(&self, url: &str) -> Result<String, ClientError> {
        let resp = self.client.get(url).send().map_err(transport)?;
        let status = resp.status();
        let text = resp.text().map_err(transport)?;
        if status.is_success() {
            Ok(text)
        } else {
            Err(classify(status, text))
        }
    }
}

pub struct HttpSearch {
    client: Client,
    url: String,
}

impl HttpSearch {
    pub fn from_env() -> anyhow::Result<Self> {
        let url = std::env::var(SEARCH_URL_ENV).map_err(|_| anyhow!("{SEARCH_URL_ENV} is not set; use --mock for offline runs"))?;
        Ok(Self { client: http(), url })
    }
}

impl SearchClient for HttpSearch {
    fn search(&self, query: &str, k: usize) -> Result<Vec<String>, ClientError> {
        let resp = self
            .client
            .get(&self.url)
            .query(&[("q", query), ("k", &k.to_string())])
            .send()
            .map_err(transport)?;
        let status = resp.status();
        let text = resp.text().map_err(transport)?;
        if !status.is_success() {
            return Err(classify(status, text));
        }
        serde_json::from_str(&text).map_err(|e| ClientError::Other(format!("search reply: {e}")))
    }
}
