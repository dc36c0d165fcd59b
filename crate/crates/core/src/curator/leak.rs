use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use super::dhash::hamming;

/// A named list of image hashes.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedHashes {
    pub name: String,
    pub hashes: Vec<u64>,
}

impl NamedHashes {
    pub fn new(name: impl Into<String>, hashes: Vec<u64>) -> Self {
        Self {
            name: name.into(),
            hashes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchMode {
    #[default]
    Exact,
    /// Hamming distance at most `k`.
    Hamming(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakCell {
    pub train: String,
    pub matches: usize,
    pub pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakRow {
    pub test: String,
    pub test_size: usize,
    pub cells: Vec<LeakCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageReport {
    pub rows: Vec<LeakRow>,
    /// Per train set, summed over all test sets.
    pub totals: LeakRow,
}

fn pct(matches: usize, size: usize) -> f64 {
    if size == 0 {
        0.0
    } else {
        matches as f64 / size as f64
    }
}

/// Counts, for each test set and training set, the test images whose hash
/// appears in the training set.
pub fn leakage_scan(train: &[NamedHashes], tests: &[NamedHashes], mode: MatchMode) -> LeakageReport {
    let exact: Vec<HashSet<u64>> = train.iter().map(|t| t.hashes.iter().copied().collect()).collect();
    let count = |ti: usize, test: &[u64]| -> usize {
        match mode {
            MatchMode::Exact => test.iter().filter(|h| exact[ti].contains(h)).count(),
            MatchMode::Hamming(k) => test
                .par_iter()
                .filter(|&&h| exact[ti].contains(&h) || train[ti].hashes.iter().any(|&g| hamming(g, h) <= k))
                .count(),
        }
    };
    let rows: Vec<LeakRow> = tests
        .iter()
        .map(|test| LeakRow {
            test: test.name.clone(),
            test_size: test.hashes.len(),
            cells: train
                .iter()
                .enumerate()
                .map(|(ti, tr)| {
                    let m = count(ti, &test.hashes);
                    LeakCell {
                        train: tr.name.clone(),
                        matches: m,
                        pct: pct(m, test.hashes.len()),
                    }
                })
                .collect(),
        })
        .collect();
    let total_size = rows.iter().map(|r| r.test_size).sum();
    let totals = LeakRow {
        test: "Total".into(),
        test_size: total_size,
        cells: train
            .iter()
            .enumerate()
            .map(|(ti, tr)| {
                let m = rows.iter().map(|r| r.cells[ti].matches).sum();
                LeakCell {
                    train: tr.name.clone(),
                    matches: m,
                    pct: pct(m, total_size),
                }
            })
            .collect(),
    };
    LeakageReport { rows, totals }
}

/// `7244` → `"7,244"`.
pub fn thousands(n: usize) -> String {
    let s = n.to_string();
    let mut out = String::new();
    for (i, ch) in s.chars().enumerate() {
        if i > 0 && (s.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

impl LeakCell {
    /// `"Cambrian10M 7,244 (14.62%)"`
    pub fn display(&self) -> String {
        format!("{} {} ({:.2}%)", self.train, thousands(self.matches), self.pct * 100.0)
    }
}

impl LeakageReport {
    /// Plain-text table, one line per test set plus the totals line.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for row in self.rows.iter().chain(std::iter::once(&self.totals)) {
            let cells: Vec<String> = row.cells.iter().map(LeakCell::display).collect();
            out.push_str(&format!("{:<16} {:>8}  {}\n", row.test, thousands(row.test_size), cells.join("  ")));
        }
        out
    }
}
