use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curator::engine::{ChatClient, ClientError};

use super::{EvalError, Result};

/// Numeric answers within this relative error are accepted (inclusive).
pub const NUMERIC_REL_TOL: f64 = 0.05;

const GRADER_TEMPLATE: &str = include_str!("../../resources/grader_prompt.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Grade {
    Correct,
    Incorrect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub value: Grade,
    /// `exact`, `letter`, `numeric`, `substring`, `none` or `llm`.
    pub rule_fired: String,
}

impl Verdict {
    fn new(correct: bool, rule: &str) -> Self {
        Self {
            value: if correct { Grade::Correct } else { Grade::Incorrect },
            rule_fired: rule.to_string(),
        }
    }

    pub fn is_correct(&self) -> bool {
        self.value == Grade::Correct
    }
}

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Lowercase, punctuation to spaces, articles dropped, whitespace collapsed.
pub fn normalize(s: &str) -> String {
    let lowered: String = s
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() || c.is_whitespace() { c } else { ' ' })
        .collect();
    lowered
        .split_whitespace()
        .filter(|t| !ARTICLES.contains(t))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Option letter and trailing text from `(a) text`, `A. text`, `A) text`,
/// `(A)` or a bare `A`. The letter is lowercased.
pub fn option_letter(s: &str) -> Option<(char, &str)> {
    let s = s.trim();
    let b = s.as_bytes();
    let (letter, rest) = if b.len() >= 3 && b[0] == b'(' && b[1].is_ascii_alphabetic() && b[2] == b')' {
        (b[1], &s[3..])
    } else if b.len() >= 2 && b[0].is_ascii_alphabetic() && (b[1] == b'.' || b[1] == b')') {
        (b[0], &s[2..])
    } else if b.len() == 1 && b[0].is_ascii_uppercase() {
        (b[0], "")
    } else {
        return None;
    };
    // "a. " or "A." followed directly by more letters is a word, not an option.
    if rest.starts_with(|c: char| c.is_alphanumeric()) {
        return None;
    }
    Some(((letter as char).to_ascii_lowercase(), rest.trim()))
}

/// Plain number with optional `$`, `%` and thousands separators.
pub fn parse_number(s: &str) -> Option<f64> {
    let t = s.trim().trim_end_matches('.').trim_start_matches('$').trim_end_matches('%').trim();
    if t.is_empty() || !t.chars().any(|c| c.is_ascii_digit()) {
        return None;
    }
    let cleaned: String = t.chars().filter(|&c| c != ',').collect();
    cleaned.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Four-digit integers in a plausible calendar range compare exactly.
fn year_like(s: &str) -> bool {
    let t = s.trim();
    t.len() == 4 && t.bytes().all(|b| b.is_ascii_digit()) && (1500..=2100).contains(&t.parse::<u32>().unwrap_or(0))
}

fn relative_error(p: f64, g: f64) -> f64 {
    (p - g).abs() / g.abs().max(1e-12)
}

fn contains_tokens(hay: &str, needle: &str) -> bool {
    let h: Vec<&str> = hay.split(' ').collect();
    let n: Vec<&str> = needle.split(' ').collect();
    !needle.is_empty() && !hay.is_empty() && h.windows(n.len()).any(|w| w == n.as_slice())
}

/// Rule-based answer matching. Rules are tried in order and the first
/// one that applies decides:
///
/// 1. `exact`: normalized strings are equal.
/// 2. `letter`: an option letter is present. Two letters must agree; a
///    letter with text matches the other side's text.
/// 3. `numeric`: both parse as numbers; relative error at most 0.05, except
///    year-like integers, which must be equal.
/// 4. `substring`: one normalized answer occurs as whole tokens inside the other.
pub fn fuzzy_match(pred: &str, gt: &str) -> Verdict {
    let (np, ng) = (normalize(pred), normalize(gt));
    if np == ng && (!np.is_empty() || pred.trim() == gt.trim()) {
        return Verdict::new(true, "exact");
    }
    match (option_letter(pred), option_letter(gt)) {
        (Some((lp, _)), Some((lg, _))) => return Verdict::new(lp == lg, "letter"),
        (Some((_, rest)), None) if !rest.is_empty() => {
            return Verdict::new(normalize(rest) == ng && !ng.is_empty(), "letter")
        }
        (None, Some((_, rest))) if !rest.is_empty() => {
            return Verdict::new(normalize(rest) == np && !np.is_empty(), "letter")
        }
        _ => {}
    }
    if let (Some(p), Some(g)) = (parse_number(pred), parse_number(gt)) {
        let ok = if year_like(pred) && year_like(gt) {
            p == g
        } else {
            relative_error(p, g) <= NUMERIC_REL_TOL
        };
        return Verdict::new(ok, "numeric");
    }
    if contains_tokens(&np, &ng) || contains_tokens(&ng, &np) {
        return Verdict::new(true, "substring");
    }
    Verdict::new(false, "none")
}

pub fn grader_template() -> &'static str {
    GRADER_TEMPLATE
}

/// The grader prompt with both placeholders filled in one pass, so text in
/// `answer` is never re-substituted.
pub fn grader_prompt(answer: &str, gt_answer: &str) -> String {
    let mut out = String::with_capacity(GRADER_TEMPLATE.len() + answer.len() + gt_answer.len());
    let mut rest = GRADER_TEMPLATE;
    while let Some(i) = rest.find('{') {
        out.push_str(&rest[..i]);
        let tail = &rest[i..];
        if let Some(t) = tail.strip_prefix("{gt_answer}") {
            out.push_str(gt_answer);
            rest = t;
        } else if let Some(t) = tail.strip_prefix("{answer}") {
            out.push_str(answer);
            rest = t;
        } else {
            out.push('{');
            rest = &tail[1..];
        }
    }
    out.push_str(rest);
    out
}

/// First word of the reply, case-insensitive, trailing punctuation ignored.
pub fn parse_grade(reply: &str) -> Option<Grade> {
    let word: String = reply
        .split_whitespace()
        .next()?
        .chars()
        .filter(|c| c.is_ascii_alphabetic())
        .collect::<String>()
        .to_ascii_uppercase();
    match word.as_str() {
        "CORRECT" => Some(Grade::Correct),
        "INCORRECT" => Some(Grade::Incorrect),
        _ => None,
    }
}

/// Asks a chat model to grade; one retry on an unparseable reply.
pub fn grade_llm(pred: &str, gt: &str, client: &dyn ChatClient) -> Result<Verdict> {
    let prompt = grader_prompt(pred, gt);
    let mut last = String::new();
    for _ in 0..2 {
        last = client.complete(&prompt).map_err(|e: ClientError| EvalError::Client(e.to_string()))?;
        if let Some(g) = parse_grade(&last) {
            return Ok(Verdict {
                value: g,
                rule_fired: "llm".into(),
            });
        }
        log::warn!("unparseable grader reply: {last:?}");
    }
    Err(EvalError::UnparsableReply(last))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: String,
    pub pred: String,
    pub gt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradedResponse {
    pub id: String,
    pub verdict: Verdict,
}

/// Grades in parallel; the LLM path is used when a client is given.
pub fn grade_all(items: &[Response], client: Option<&dyn ChatClient>) -> Result<Vec<GradedResponse>> {
    items
        .par_iter()
        .map(|r| {
            let verdict = match client {
                Some(c) => grade_llm(&r.pred, &r.gt, c)?,
                None => fuzzy_match(&r.pred, &r.gt),
            };
            Ok(GradedResponse {
                id: r.id.clone(),
                verdict,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curator::engine::Replay;

    #[test]
    fn few_shot_pairs() {
        let cases = [
            ("25", "29", false),
            ("Yes", "Yes", true),
            ("80", "80", true),
            ("Ireland", "Italy", false),
            ("UK", "UK", true),
            ("2019", "2011", false),
        ];
        for (p, g, ok) in cases {
            assert_eq!(fuzzy_match(p, g).is_correct(), ok, "{p} vs {g}");
        }
    }

    #[test]
    fn option_forms() {
        assert!(fuzzy_match("the Apple", "(a) Apple").is_correct());
        assert!(fuzzy_match("(B)", "B. dog").is_correct());
        assert!(!fuzzy_match("(A)", "(B) cat").is_correct());
        assert_eq!(option_letter("A. cat"), Some(('a', "cat")));
        assert_eq!(option_letter("a.m."), None);
    }

    #[test]
    fn numeric_boundary_inclusive() {
        let v = fuzzy_match("105", "100");
        assert_eq!((v.is_correct(), v.rule_fired.as_str()), (true, "numeric"));
        assert!(!fuzzy_match("105.1", "100").is_correct());
        assert!(fuzzy_match("1,000", "1000").is_correct());
    }

    #[test]
    fn substring_tokens() {
        assert!(fuzzy_match("The answer is yes.", "yes").is_correct());
        assert!(!fuzzy_match("yesterday", "yes").is_correct());
    }

    #[test]
    fn prompt_tail() {
        let p = grader_prompt("{gt_answer}", "x");
        assert!(p.ends_with("answer: {gt_answer}\ngt_answer: x\nevaluation:"));
        assert!(p.starts_with("You are a reliable grader. Reply with only either of the following \n2 words"));
    }

    #[test]
    fn llm_lenient_and_retry() {
        let c = Replay::new().when_contains("gt_answer: b\n", "incorrect.");
        assert_eq!(grade_llm("a", "b", &c).unwrap().value, Grade::Incorrect);
        let c = Replay::new().when_contains("gt_answer: b\n", "maybe");
        assert!(matches!(grade_llm("a", "b", &c), Err(EvalError::UnparsableReply(r)) if r == "maybe"));
        assert_eq!(c.calls(), 2);
    }
}
