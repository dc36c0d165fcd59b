use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::cvbench::{QuestionItem, Status};

use super::{Result, ReviewError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accepted,
    Modified,
    Rejected,
}

impl Decision {
    pub fn status(self) -> Status {
        match self {
            Decision::Accepted => Status::Accepted,
            Decision::Modified => Status::Modified,
            Decision::Rejected => Status::Rejected,
        }
    }
}

/// Replacement fields carried by a `modified` decision.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edits {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edited_prompt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edited_choices: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edited_answer: Option<usize>,
}

impl Edits {
    pub fn is_empty(&self) -> bool {
        self.edited_prompt.is_none() && self.edited_choices.is_none() && self.edited_answer.is_none()
    }

    /// The item with every present edit applied.
    pub fn apply(&self, item: &QuestionItem) -> QuestionItem {
        let mut out = item.clone();
        if let Some(p) = &self.edited_prompt {
            out.prompt = p.clone();
        }
        if let Some(c) = &self.edited_choices {
            out.choices = c.clone();
        }
        if let Some(a) = self.edited_answer {
            out.answer_index = a;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub item_id: String,
    pub decision: Decision,
    #[serde(flatten)]
    pub edits: Edits,
    pub reviewer: String,
    pub timestamp: DateTime<Utc>,
    /// Resubmissions carrying a key already in the journal are not recorded again.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idempotency_key: Option<String>,
}

impl DecisionRecord {
    pub fn new(item_id: impl Into<String>, decision: Decision, reviewer: impl Into<String>) -> Self {
        Self {
            item_id: item_id.into(),
            decision,
            edits: Edits::default(),
            reviewer: reviewer.into(),
            timestamp: Utc::now(),
            idempotency_key: None,
        }
    }

    pub fn with_edits(mut self, edits: Edits) -> Self {
        self.edits = edits;
        self
    }

    /// Edits must be present exactly when the decision is `modified`, and
    /// the resulting answer index must name one of the resulting choices.
    pub fn validate(&self, item: &QuestionItem) -> Result<()> {
        let bad = |m: String| Err(ReviewError::Validation(m));
        if self.reviewer.trim().is_empty() {
            return bad("reviewer name is empty".into());
        }
        match (self.decision, self.edits.is_empty()) {
            (Decision::Modified, true) => return bad("modified decision without edits".into()),
            (Decision::Accepted | Decision::Rejected, false) => {
                return bad(format!("{:?} decision must not carry edits", self.decision).to_lowercase())
            }
            _ => {}
        }
        if let Some(c) = &self.edits.edited_choices {
            if c.len() < 2 {
                return bad(format!("{} choices given, need at least 2", c.len()));
            }
        }
        let edited = self.edits.apply(item);
        if edited.answer_index >= edited.choices.len() {
            return bad(format!(
                "answer index {} out of range for {} choices",
                edited.answer_index,
                edited.choices.len()
            ));
        }
        Ok(())
    }
}
