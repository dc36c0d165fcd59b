use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use crate::cvbench::{Composition, QuestionItem, Status};
use crate::jsonl;

use super::decision::{Decision, DecisionRecord};
use super::journal::DecisionJournal;
use super::{Result, ReviewError};

pub const MAX_PAGE_SIZE: usize = 1000;

/// Effective review state derived from the journal.
#[derive(Debug, Clone, Default)]
struct Snapshot {
    latest: HashMap<String, DecisionRecord>,
    keys: HashSet<String>,
    entries: usize,
}

impl Snapshot {
    fn apply(&mut self, record: DecisionRecord) {
        if let Some(k) = &record.idempotency_key {
            self.keys.insert(k.clone());
        }
        self.entries += 1;
        self.latest.insert(record.item_id.clone(), record);
    }

    fn status(&self, id: &str) -> Status {
        self.latest.get(id).map_or(Status::Pending, |r| r.decision.status())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page {
    pub items: Vec<QuestionItem>,
    /// 1-based.
    pub page: usize,
    pub size: usize,
    pub total: usize,
    pub pages: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub item_id: String,
    pub status: Status,
    /// True when the idempotency key had already been recorded.
    pub duplicate: bool,
    pub journal_entries: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub total: usize,
    pub pending: usize,
    pub accepted: usize,
    pub modified: usize,
    pub rejected: usize,
    pub journal_entries: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportMeta {
    pub accepted: usize,
    pub modified: usize,
    pub rejected: usize,
    pub pending: usize,
    /// Modified items whose prompt text was changed.
    pub prompt_edited: Vec<String>,
    /// Modified items whose option list was changed.
    pub choices_edited: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportBundle {
    pub items: Vec<QuestionItem>,
    pub composition: Composition,
    pub meta: ExportMeta,
}

/// Items plus their decision journal. Reads clone an `Arc` snapshot; all
/// writes go through one journal appender.
pub struct ReviewStore {
    items: Vec<QuestionItem>,
    index: HashMap<String, usize>,
    state: RwLock<Arc<Snapshot>>,
    writer: Mutex<DecisionJournal>,
}

impl ReviewStore {
    /// Store over `items` (sorted by id) with `records` already replayed.
    pub fn new(mut items: Vec<QuestionItem>, records: Vec<DecisionRecord>, journal: DecisionJournal) -> Result<Self> {
        items.sort_by(|a, b| a.id.cmp(&b.id));
        let mut index = HashMap::with_capacity(items.len());
        for (i, it) in items.iter().enumerate() {
            if index.insert(it.id.clone(), i).is_some() {
                return Err(ReviewError::DuplicateItem(it.id.clone()));
            }
        }
        let mut snap = Snapshot::default();
        for r in records {
            if !index.contains_key(&r.item_id) {
                log::warn!("journal names unknown item {}; skipped", r.item_id);
                continue;
            }
            snap.apply(r);
        }
        Ok(Self {
            items,
            index,
            state: RwLock::new(Arc::new(snap)),
            writer: Mutex::new(journal),
        })
    }

    pub fn in_memory(items: Vec<QuestionItem>) -> Result<Self> {
        Self::new(items, Vec::new(), DecisionJournal::in_memory())
    }

    /// Loads the item file and replays the journal at `journal_path`,
    /// creating it when absent.
    pub fn open(items_path: impl AsRef<Path>, journal_path: impl AsRef<Path>) -> Result<Self> {
        let items = jsonl::read_file(items_path)?;
        let (journal, records) = DecisionJournal::open(journal_path)?;
        Self::new(items, records, journal)
    }

    fn snapshot(&self) -> Arc<Snapshot> {
        self.state.read().clone()
    }

    fn effective(&self, item: &QuestionItem, snap: &Snapshot) -> QuestionItem {
        match snap.latest.get(&item.id) {
            None => QuestionItem {
                status: Status::Pending,
                ..item.clone()
            },
            Some(r) => QuestionItem {
                status: r.decision.status(),
                ..if r.decision == Decision::Modified {
                    r.edits.apply(item)
                } else {
                    item.clone()
                }
            },
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn status(&self, id: &str) -> Option<Status> {
        self.index.get(id).map(|_| self.snapshot().status(id))
    }

    /// Items in id order, optionally filtered by effective status.
    pub fn list(&self, status: Option<Status>, page: usize, size: usize) -> Result<Page> {
        if size == 0 || size > MAX_PAGE_SIZE {
            return Err(ReviewError::BadPage(format!("size must be in 1..={MAX_PAGE_SIZE}, got {size}")));
        }
        let snap = self.snapshot();
        let matching: Vec<&QuestionItem> = self
            .items
            .iter()
            .filter(|it| status.is_none_or(|s| snap.status(&it.id) == s))
            .collect();
        let total = matching.len();
        let pages = total.div_ceil(size);
        if page == 0 || page > pages.max(1) {
            return Err(ReviewError::BadPage(format!("page {page} outside 1..={}", pages.max(1))));
        }
        let items = matching
            .into_iter()
            .skip((page - 1) * size)
            .take(size)
            .map(|it| self.effective(it, &snap))
            .collect();
        Ok(Page {
            items,
            page,
            size,
            total,
            pages,
        })
    }

    /// Validates, journals and applies one decision; the latest decision
    /// for an item wins.
    pub fn submit(&self, record: DecisionRecord) -> Result<Ack> {
        let &i = self
            .index
            .get(&record.item_id)
            .ok_or_else(|| ReviewError::NotFound(record.item_id.clone()))?;
        record.validate(&self.items[i])?;
        let mut writer = self.writer.lock();
        let current = self.snapshot();
        if record.idempotency_key.as_ref().is_some_and(|k| current.keys.contains(k)) {
            return Ok(Ack {
                status: current.status(&record.item_id),
                item_id: record.item_id,
                duplicate: true,
                journal_entries: current.entries,
            });
        }
        writer.append(&record)?;
        let mut next = (*current).clone();
        let item_id = record.item_id.clone();
        next.apply(record);
        let ack = Ack {
            status: next.status(&item_id),
            item_id,
            duplicate: false,
            journal_entries: next.entries,
        };
        *self.state.write() = Arc::new(next);
        Ok(ack)
    }

    pub fn stats(&self) -> Stats {
        let snap = self.snapshot();
        let mut s = Stats {
            total: self.items.len(),
            journal_entries: snap.entries,
            ..Stats::default()
        };
        for it in &self.items {
            match snap.status(&it.id) {
                Status::Pending => s.pending += 1,
                Status::Accepted => s.accepted += 1,
                Status::Modified => s.modified += 1,
                Status::Rejected => s.rejected += 1,
            }
        }
        s
    }

    /// Accepted items as they are and modified items with edits applied.
    /// Pending items are an error unless `allow_pending`, and are never exported.
    pub fn export(&self, allow_pending: bool) -> Result<ExportBundle> {
        let snap = self.snapshot();
        let mut meta = ExportMeta::default();
        let mut items = Vec::new();
        for it in &self.items {
            match snap.latest.get(&it.id) {
                None => meta.pending += 1,
                Some(r) => match r.decision {
                    Decision::Rejected => meta.rejected += 1,
                    Decision::Accepted => {
                        meta.accepted += 1;
                        items.push(self.effective(it, &snap));
                    }
                    Decision::Modified => {
                        meta.modified += 1;
                        if r.edits.edited_prompt.as_ref().is_some_and(|p| *p != it.prompt) {
                            meta.prompt_edited.push(it.id.clone());
                        }
                        if r.edits.edited_choices.as_ref().is_some_and(|c| *c != it.choices) {
                            meta.choices_edited.push(it.id.clone());
                        }
                        items.push(self.effective(it, &snap));
                    }
                },
            }
        }
        if meta.pending > 0 && !allow_pending {
            return Err(ReviewError::Pending { count: meta.pending });
        }
        Ok(ExportBundle {
            composition: Composition::of_items(&items),
            items,
            meta,
        })
    }
}
