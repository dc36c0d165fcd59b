use std::collections::BTreeMap;

use serde::Deserialize;

use super::pool::PoolRecord;
use super::{CuratorError, Result};

const BUNDLED: &str = include_str!("../../resources/format_prompts.json");

/// Response-format prompts and which datasets get which.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PromptRegistry {
    prompts: BTreeMap<usize, String>,
    /// Prompts that ask for an option letter. Used only for multiple-choice
    /// questions when a dataset lists several prompts.
    #[serde(default)]
    choice_prompts: Vec<usize>,
    datasets: BTreeMap<String, Vec<usize>>,
}

impl Default for PromptRegistry {
    fn default() -> Self {
        Self::parse(BUNDLED).expect("bundled registry parses")
    }
}

fn source_key(s: &str) -> String {
    s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase()
}

/// Looks for lettered options such as `\nA.` or `(B)` on their own line.
fn has_lettered_options(text: &str) -> bool {
    text.lines().any(|l| {
        let l = l.trim_start();
        let b = l.as_bytes();
        (b.len() >= 2 && b[0].is_ascii_uppercase() && (b[1] == b'.' || b[1] == b')'))
            || (b.len() >= 3 && b[0] == b'(' && b[1].is_ascii_uppercase() && b[2] == b')')
    })
}

impl PromptRegistry {
    pub fn parse(json: &str) -> Result<Self> {
        let r: Self =
            serde_json::from_str(json).map_err(|e| CuratorError::Config(format!("prompt registry: {e}")))?;
        for (ds, idx) in &r.datasets {
            if let Some(bad) = idx.iter().find(|i| !r.prompts.contains_key(i)) {
                return Err(CuratorError::Config(format!("{ds} refers to unknown prompt {bad}")));
            }
        }
        Ok(r)
    }

    pub fn prompt(&self, index: usize) -> Option<&str> {
        self.prompts.get(&index).map(String::as_str)
    }

    pub fn indices_for(&self, source: &str) -> Option<&[usize]> {
        let key = source_key(source);
        self.datasets
            .iter()
            .find(|(k, _)| source_key(k) == key)
            .map(|(_, v)| v.as_slice())
    }

    /// Prompts that apply to `instruction` from `source`. With several
    /// listed prompts, letter prompts go to multiple-choice questions and
    /// the rest to everything else.
    pub fn select(&self, source: &str, instruction: &str) -> Option<Vec<&str>> {
        let idx = self.indices_for(source)?;
        let (choice, open): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|i| self.choice_prompts.contains(i));
        let chosen = if idx.len() == 1 || choice.is_empty() || open.is_empty() {
            idx.to_vec()
        } else if has_lettered_options(instruction) {
            choice
        } else {
            open
        };
        Some(chosen.iter().filter_map(|&i| self.prompt(i)).collect())
    }
}

/// Appends the dataset's format prompt(s) on new lines. Prompts already in
/// the instruction are not added again, so applying twice is the same as
/// once. Unknown sources pass through unless `strict`.
pub fn attach_format_prompt(record: &PoolRecord, registry: &PromptRegistry, strict: bool) -> Result<PoolRecord> {
    let Some(prompts) = registry.select(&record.source, &record.instruction) else {
        if strict {
            return Err(CuratorError::UnknownSource(record.source.clone()));
        }
        return Ok(record.clone());
    };
    let mut out = record.clone();
    for p in prompts {
        if !out.instruction.contains(p) {
            out.instruction.push('\n');
            out.instruction.push_str(p);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::pool::Category;
    use super::*;

    fn rec(source: &str, instruction: &str) -> PoolRecord {
        PoolRecord {
            id: "1".into(),
            source: source.into(),
            category: Category::Ocr,
            instruction: instruction.into(),
            response: String::new(),
            image: None,
        }
    }

    #[test]
    fn chartqa_number_prompt() {
        let reg = PromptRegistry::default();
        let out = attach_format_prompt(&rec("ChartQA", "How many bars?"), &reg, true).unwrap();
        assert_eq!(out.instruction, "How many bars?\nAnswer the question using a single number or phrase.");
        let twice = attach_format_prompt(&out, &reg, true).unwrap();
        assert_eq!(twice, out);
    }

    #[test]
    fn unknown_source() {
        let reg = PromptRegistry::default();
        let r = rec("LLaVA150K", "Describe.");
        assert_eq!(attach_format_prompt(&r, &reg, false).unwrap(), r);
        assert!(matches!(attach_format_prompt(&r, &reg, true), Err(CuratorError::UnknownSource(_))));
    }

    #[test]
    fn mixed_lists_split_on_options() {
        let reg = PromptRegistry::default();
        let mc = attach_format_prompt(&rec("IconQA", "Which?\nA. x\nB. y"), &reg, true).unwrap();
        assert!(mc.instruction.ends_with("\nAnswer with the letter."));
        let open = attach_format_prompt(&rec("iconqa", "How many?"), &reg, true).unwrap();
        assert!(open.instruction.ends_with("\nAnswer the question using a single word or phrase."));
    }

    #[test]
    fn screenqa_gets_both_open_prompts() {
        let reg = PromptRegistry::default();
        let out = attach_format_prompt(&rec("ScreenQA", "What?"), &reg, true).unwrap();
        assert_eq!(
            out.instruction,
            "What?\nAnswer the question using a single word or phrase.\nWhen the provided information is insufficient, respond with <no answer>."
        );
    }
}
