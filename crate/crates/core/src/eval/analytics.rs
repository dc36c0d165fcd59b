use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::table::{BenchCategory, BenchmarkMeta, ScoreTable};
use super::{EvalError, Result};

/// Benchmarks whose vision gap is below this many points are flagged.
pub const VISION_GAP_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryScores {
    pub model: String,
    pub scores: IndexMap<BenchCategory, f64>,
}

/// Per-model unweighted means of scaled scores within each category.
pub fn category_scores(table: &ScoreTable) -> Result<Vec<CategoryScores>> {
    let mut members: IndexMap<BenchCategory, Vec<usize>> = IndexMap::new();
    for c in BenchCategory::ALL {
        members.insert(c, Vec::new());
    }
    for (j, b) in table.benchmarks.iter().enumerate() {
        members.entry(b.category).or_default().push(j);
    }
    if let Some((c, _)) = members.iter().find(|(_, v)| v.is_empty()) {
        return Err(EvalError::EmptyCategory(c.name()));
    }
    Ok(table
        .models
        .iter()
        .enumerate()
        .map(|(m, model)| CategoryScores {
            model: model.clone(),
            scores: members
                .iter()
                .map(|(&c, cols)| {
                    let sum: f64 = cols.iter().map(|&j| table.scaled(m, j)).sum();
                    (c, sum / cols.len() as f64)
                })
                .collect(),
        })
        .collect())
}

/// Expected score of uniform guessing on a single-answer multiple-choice benchmark.
pub fn random_baseline(meta: &BenchmarkMeta) -> Result<f64> {
    let err = |reason: &str| EvalError::Baseline {
        benchmark: meta.name.clone(),
        reason: reason.into(),
    };
    if meta.paired {
        return Err(err("paired scoring has no single-answer guessing rate"));
    }
    match meta.num_choices {
        None => Err(err("num_choices missing")),
        Some(0) => Err(err("num_choices is 0")),
        Some(n) => Ok(100.0 / n as f64),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub benchmark: String,
    pub mean_enabled: f64,
    pub mean_disabled: f64,
    /// `mean_enabled - mean_disabled`, in points.
    pub gap: f64,
    pub random: Option<f64>,
    /// `mean_disabled - random`, when a baseline exists.
    pub disabled_over_random: Option<f64>,
    pub vision_insensitive: bool,
}

fn column_mean(t: &ScoreTable, j: usize) -> f64 {
    (0..t.num_models()).map(|m| t.scaled(m, j)).sum::<f64>() / t.num_models() as f64
}

/// Mean score drop when visual input is disabled, largest first.
///
/// `baselines` maps benchmark names to random-guess scores; benchmarks
/// without an entry get `None`.
pub fn vision_gap_report(
    enabled: &ScoreTable,
    disabled: &ScoreTable,
    baselines: &IndexMap<String, f64>,
) -> Result<Vec<GapEntry>> {
    fn names(t: &ScoreTable) -> Vec<&str> {
        let mut v: Vec<&str> = t.benchmarks.iter().map(|b| b.name.as_str()).collect();
        v.sort_unstable();
        v
    }
    if names(enabled) != names(disabled) {
        return Err(EvalError::Mismatch(format!("{:?} vs {:?}", names(enabled), names(disabled))));
    }
    if enabled.num_models() == 0 || disabled.num_models() == 0 {
        return Err(EvalError::Table("no models".into()));
    }
    let mut out: Vec<GapEntry> = enabled
        .benchmarks
        .iter()
        .enumerate()
        .map(|(j, b)| {
            let jd = disabled.benchmark_index(&b.name).expect("sets checked");
            let (me, md) = (column_mean(enabled, j), column_mean(disabled, jd));
            let random = baselines.get(&b.name).copied();
            GapEntry {
                benchmark: b.name.clone(),
                mean_enabled: me,
                mean_disabled: md,
                gap: me - md,
                random,
                disabled_over_random: random.map(|r| md - r),
                vision_insensitive: me - md < VISION_GAP_THRESHOLD,
            }
        })
        .collect();
    out.sort_by(|a, b| b.gap.total_cmp(&a.gap));
    Ok(out)
}
