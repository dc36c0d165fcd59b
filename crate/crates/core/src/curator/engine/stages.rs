use std::collections::HashSet;

use indexmap::IndexMap;
use scraper::{ElementRef, Html, Selector};
use serde::{Deserialize, Serialize};

use super::clients::{ChatClient, ClientError, RetryPolicy, SearchClient};
use super::EngineError;

/// Contexts shorter than this many words are dropped before generation.
pub const MIN_CONTEXT_WORDS: usize = 50;

pub const LINKS_PER_TOPIC: usize = 10;

/// Subfield name to topic list.
pub type TopicMap = IndexMap<String, Vec<String>>;

pub fn topics_prompt(field: &str) -> String {
    format!(
        "List the main subfields of {field}. For each subfield list 20 distinct, specific topics \
         that are commonly illustrated with figures or diagrams.\n\
         Reply with only a JSON object mapping each subfield name to an array of topic strings."
    )
}

/// The outermost `{...}` span, tolerating prose or code fences around it.
fn json_object(raw: &str) -> Option<&str> {
    let start = raw.find('{')?;
    let end = raw.rfind('}')?;
    (end > start).then(|| &raw[start..=end])
}

fn dedupe(items: Vec<String>) -> Vec<String> {
    let mut seen = HashSet::new();
    items.into_iter().filter(|t| seen.insert(t.clone())).collect()
}

/// Parses a topic reply. Duplicate topics within a subfield are dropped,
/// keeping first occurrences.
pub fn parse_topics(raw: &str) -> Result<TopicMap, EngineError> {
    let malformed = |reason: String| EngineError::Malformed {
        stage: "topics",
        reason,
        raw: raw.to_string(),
    };
    let body = json_object(raw).ok_or_else(|| malformed("no JSON object".into()))?;
    let map: IndexMap<String, Vec<String>> =
        serde_json::from_str(body).map_err(|e| malformed(e.to_string()))?;
    Ok(map.into_iter().map(|(k, v)| (k, dedupe(v))).collect())
}

pub fn engine_topics(field: &str, client: &dyn ChatClient) -> Result<TopicMap, EngineError> {
    let raw = client.complete(&topics_prompt(field))?;
    parse_topics(&raw)
}

pub fn engine_topics_for(fields: &[&str], client: &dyn ChatClient) -> Result<IndexMap<String, TopicMap>, EngineError> {
    fields
        .iter()
        .map(|f| Ok((f.to_string(), engine_topics(f, client)?)))
        .collect()
}

/// Up to `k` distinct https URLs, in the order the client returned them.
pub fn engine_search(
    topic: &str,
    client: &dyn SearchClient,
    k: usize,
    retry: &RetryPolicy,
) -> Result<Vec<String>, EngineError> {
    let raw = retry.run(|| client.search(topic, k))?;
    let mut urls = dedupe(raw.into_iter().filter(|u| u.starts_with("https://")).collect());
    urls.truncate(k);
    Ok(urls)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRef {
    pub url: String,
    pub caption: String,
}

/// Figures of one page section with that section's running text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedBlock {
    pub section: String,
    pub text: String,
    pub images: Vec<ImageRef>,
}

fn sel(s: &str) -> Selector {
    Selector::parse(s).expect("static selector")
}

fn is_figure(e: &ElementRef) -> bool {
    let v = e.value();
    v.name() == "figure" || (v.name() == "div" && v.classes().any(|c| c == "thumb"))
}

fn inside_figure(e: &ElementRef) -> bool {
    e.ancestors().filter_map(ElementRef::wrap).any(|a| is_figure(&a))
}

fn image_url(src: &str) -> String {
    match src.strip_prefix("//") {
        Some(rest) => format!("https://{rest}"),
        None => src.to_string(),
    }
}

fn heading_text(e: &ElementRef) -> String {
    let headline = sel(".mw-headline");
    match e.select(&headline).next() {
        Some(h) => h.text().collect::<String>().trim().to_string(),
        None => e.text().collect::<String>().trim().to_string(),
    }
}

/// Page title from `<title>` or the first `<h1>`.
pub fn page_title(html: &str) -> String {
    let doc = Html::parse_document(html);
    doc.select(&sel("title"))
        .chain(doc.select(&sel("h1")))
        .map(|e| e.text().collect::<String>().trim().to_string())
        .find(|t| !t.is_empty())
        .unwrap_or_default()
}

/// Extracts figure/caption pairs grouped by section. Recognises `<figure>`
/// with `<figcaption>` and wiki-style `div.thumb` with `.thumbcaption`.
/// Caption text is kept exactly as it appears, including whitespace.
/// Sections without images are dropped.
pub fn engine_parse(html: &str) -> Vec<ParsedBlock> {
    let doc = Html::parse_document(html);
    let walk = sel("h1, h2, h3, h4, h5, h6, p, figure, div.thumb");
    let img = sel("img");
    let caption = sel("figcaption, .thumbcaption");
    let mut blocks: Vec<ParsedBlock> = vec![ParsedBlock {
        section: String::new(),
        text: String::new(),
        images: Vec::new(),
    }];
    for e in doc.select(&walk) {
        let name = e.value().name();
        if is_figure(&e) {
            if inside_figure(&e) {
                continue;
            }
            let Some(src) = e.select(&img).find_map(|i| i.value().attr("src")) else {
                continue;
            };
            let cap = e
                .select(&caption)
                .next()
                .map(|c| c.text().collect::<String>())
                .unwrap_or_default();
            blocks.last_mut().expect("nonempty").images.push(ImageRef {
                url: image_url(src),
                caption: cap,
            });
        } else if inside_figure(&e) {
            continue;
        } else if name.len() == 2 && name.starts_with('h') {
            blocks.push(ParsedBlock {
                section: heading_text(&e),
                text: String::new(),
                images: Vec::new(),
            });
        } else {
            let t = e.text().collect::<String>();
            let t = t.trim();
            if !t.is_empty() {
                let cur = &mut blocks.last_mut().expect("nonempty").text;
                if !cur.is_empty() {
                    cur.push(' ');
                }
                cur.push_str(t);
            }
        }
    }
    blocks.retain(|b| !b.images.is_empty());
    blocks
}

/// One image with everything known about where it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineTuple {
    pub field: String,
    pub subfield: String,
    pub topic: String,
    pub link: String,
    pub title: String,
    pub section: String,
    pub text: String,
    pub image: ImageRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineItem {
    pub id: String,
    #[serde(default)]
    pub image_id: String,
    pub image_url: String,
    pub text: String,
    pub caption: String,
    #[serde(default)]
    pub section: String,
    #[serde(rename = "Question")]
    pub question: String,
    #[serde(rename = "Answer")]
    pub answer: String,
    #[serde(default)]
    pub field: String,
    #[serde(default)]
    pub subfield: String,
    #[serde(default)]
    pub topic: String,
    #[serde(default, alias = "link")]
    pub source_url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum QaOutcome {
    Accepted(Box<EngineItem>),
    Rejected { reason: String },
}

/// Placeholder wording; no canonical prompt is published for this step.
pub fn qa_prompt(t: &EngineTuple) -> String {
    format!(
        "You are writing visual question-answer pairs for {field} ({subfield}), topic \"{topic}\".\n\
         Section: {section}\nImage caption: {caption}\nContext: {text}\n\n\
         Write one question that requires looking at the image to answer, and its answer, \
         grounded in the caption and context. Reply with only a JSON object of the form \
         {{\"question\": \"...\", \"answer\": \"...\"}}.",
        field = t.field,
        subfield = t.subfield,
        topic = t.topic,
        section = t.section,
        caption = t.image.caption,
        text = t.text,
    )
}

/// `"<n>.png"` from a hash of the image URL, so one image keeps one id.
pub fn item_id(image_url: &str) -> String {
    format!("{}.png", crate::seed::derive(0, image_url) % 100_000)
}

fn image_stem(url: &str) -> String {
    let file = url.rsplit('/').next().unwrap_or(url);
    let file = file.split(['?', '#']).next().unwrap_or(file);
    file.split('.').next().unwrap_or(file).to_string()
}

#[derive(Deserialize)]
struct QaReply {
    #[serde(alias = "Question")]
    question: String,
    #[serde(alias = "Answer")]
    answer: String,
}

/// Drops short contexts, otherwise asks the client for a Q&A pair.
/// Refusals and unusable replies become rejections; transport errors
/// propagate.
pub fn engine_generate_qa(t: &EngineTuple, client: &dyn ChatClient) -> Result<QaOutcome, EngineError> {
    let words = t.text.split_whitespace().count();
    if words < MIN_CONTEXT_WORDS {
        return Ok(QaOutcome::Rejected {
            reason: "short-context".into(),
        });
    }
    let raw = match client.complete(&qa_prompt(t)) {
        Ok(r) => r,
        Err(ClientError::Refused(msg)) => {
            log::warn!("qa refused for {}: {msg}", t.image.url);
            return Ok(QaOutcome::Rejected {
                reason: format!("refused: {msg}"),
            });
        }
        Err(e) => return Err(e.into()),
    };
    let reply = json_object(&raw).and_then(|b| serde_json::from_str::<QaReply>(b).ok());
    let Some(reply) = reply.filter(|r| !r.question.trim().is_empty() && !r.answer.trim().is_empty()) else {
        log::warn!("unusable qa reply for {}", t.image.url);
        return Ok(QaOutcome::Rejected {
            reason: "malformed-reply".into(),
        });
    };
    Ok(QaOutcome::Accepted(Box::new(EngineItem {
        id: item_id(&t.image.url),
        image_id: image_stem(&t.image.url),
        image_url: t.image.url.clone(),
        text: t.text.clone(),
        caption: t.image.caption.clone(),
        section: t.section.clone(),
        question: reply.question,
        answer: reply.answer,
        field: t.field.clone(),
        subfield: t.subfield.clone(),
        topic: t.topic.clone(),
        source_url: t.link.clone(),
    })))
}
