use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CuratorError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    General,
    #[serde(rename = "OCR")]
    Ocr,
    Counting,
    Code,
    Math,
    Science,
    Language,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::General,
        Category::Ocr,
        Category::Counting,
        Category::Code,
        Category::Math,
        Category::Science,
        Category::Language,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::General => "General",
            Category::Ocr => "OCR",
            Category::Counting => "Counting",
            Category::Code => "Code",
            Category::Math => "Math",
            Category::Science => "Science",
            Category::Language => "Language",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = CuratorError;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| CuratorError::Config(format!("unknown category {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolRecord {
    pub id: String,
    pub source: String,
    pub category: Category,
    pub instruction: String,
    #[serde(default)]
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DataPool {
    pub records: Vec<PoolRecord>,
}

impl DataPool {
    pub fn new(records: Vec<PoolRecord>) -> Self {
        Self { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Record count per source, in first-seen order.
    pub fn source_counts(&self) -> IndexMap<&str, usize> {
        let mut m = IndexMap::new();
        for r in &self.records {
            *m.entry(r.source.as_str()).or_insert(0) += 1;
        }
        m
    }

    pub fn category_counts(&self) -> IndexMap<Category, usize> {
        let mut m: IndexMap<Category, usize> = Category::ALL.iter().map(|&c| (c, 0)).collect();
        for r in &self.records {
            m[&r.category] += 1;
        }
        m
    }

    pub fn read_jsonl(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Ok(Self::new(crate::jsonl::read_file(path)?))
    }

    pub fn write_jsonl(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        Ok(crate::jsonl::write_file(path, &self.records)?)
    }
}

/// Sources sorted by ascending count; point `r` (1-based) is the total of
/// the `r` smallest sources.
pub fn cumulative_curve(pool: &DataPool) -> Result<Vec<(usize, usize)>> {
    if pool.is_empty() {
        return Err(CuratorError::EmptyPool);
    }
    let mut counts: Vec<usize> = pool.source_counts().values().copied().collect();
    counts.sort_unstable();
    let mut total = 0;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            total += c;
            (i + 1, total)
        })
        .collect())
}

/// Caps every source at `t` records by a seeded uniform subsample. Each
/// source shuffles with its own derived seed, so a larger `t` keeps a
/// superset of what a smaller `t` kept. Survivors stay in pool order.
pub fn apply_threshold(pool: &DataPool, t: usize, seed: u64) -> Result<DataPool> {
    if t == 0 {
        return Err(CuratorError::Config("threshold t must be positive".into()));
    }
    let mut by_source: IndexMap<&str, Vec<usize>> = IndexMap::new();
    for (i, r) in pool.records.iter().enumerate() {
        by_source.entry(&r.source).or_default().push(i);
    }
    let mut keep = vec![false; pool.len()];
    for (source, mut idx) in by_source {
        if idx.len() > t {
            let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive(seed, source));
            idx.shuffle(&mut rng);
            idx.truncate(t);
        }
        for i in idx {
            keep[i] = true;
        }
    }
    Ok(DataPool::new(
        pool.records
            .iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(r, _)| r.clone())
            .collect(),
    ))
}

/// Index of the knee of a monotone curve: the point farthest from the
/// chord joining the endpoints after scaling both axes to `[0, 1]`.
/// `None` for fewer than three points or a flat curve.
pub fn elbow_index(points: &[(f64, f64)]) -> Option<usize> {
    if points.len() < 3 {
        return None;
    }
    let (x0, y0) = points[0];
    let (x1, y1) = points[points.len() - 1];
    let (sx, sy) = (x1 - x0, y1 - y0);
    if sx == 0.0 || sy == 0.0 {
        return None;
    }
    points
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            let (u, v) = ((x - x0) / sx, (y - y0) / sy);
            (i, (v - u).abs())
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .filter(|&(_, d)| d > 0.0)
        .map(|(i, _)| i)
}
