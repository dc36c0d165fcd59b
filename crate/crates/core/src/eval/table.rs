use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{EvalError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BenchCategory {
    General,
    Knowledge,
    #[serde(rename = "OCR & Chart", alias = "OCR&Chart", alias = "Chart & OCR", alias = "OCR")]
    OcrChart,
    #[serde(rename = "Vision-Centric", alias = "Vision Centric", alias = "VisionCentric")]
    VisionCentric,
}

impl BenchCategory {
    pub const ALL: [BenchCategory; 4] = [
        BenchCategory::General,
        BenchCategory::Knowledge,
        BenchCategory::OcrChart,
        BenchCategory::VisionCentric,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchCategory::General => "General",
            BenchCategory::Knowledge => "Knowledge",
            BenchCategory::OcrChart => "OCR & Chart",
            BenchCategory::VisionCentric => "Vision-Centric",
        }
    }
}

impl fmt::Display for BenchCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchCategory {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.trim().to_string()))
            .map_err(|_| EvalError::Table(format!("unknown benchmark category {s:?}")))
    }
}

fn default_divisor() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkMeta {
    #[serde(alias = "benchmark")]
    pub name: String,
    pub category: BenchCategory,
    /// Scores are divided by this before averaging (20 for MME perception).
    #[serde(default = "default_divisor", alias = "divisor")]
    pub scale_divisor: f64,
    #[serde(default)]
    pub num_choices: Option<u32>,
    #[serde(default)]
    pub size: usize,
    /// Scored on question pairs rather than single answers.
    #[serde(default)]
    pub paired: bool,
}

impl BenchmarkMeta {
    pub fn new(name: impl Into<String>, category: BenchCategory) -> Self {
        Self {
            name: name.into(),
            category,
            scale_divisor: 1.0,
            num_choices: None,
            size: 0,
            paired: false,
        }
    }
}

/// Models × benchmarks score grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub models: Vec<String>,
    pub benchmarks: Vec<BenchmarkMeta>,
    /// `scores[model][benchmark]`
    pub scores: Vec<Vec<f64>>,
}

impl ScoreTable {
    pub fn new(models: Vec<String>, benchmarks: Vec<BenchmarkMeta>, scores: Vec<Vec<f64>>) -> Result<Self> {
        if scores.len() != models.len() {
            return Err(EvalError::Table(format!(
                "{} score rows for {} models",
                scores.len(),
                models.len()
            )));
        }
        for (m, row) in models.iter().zip(&scores) {
            if row.len() != benchmarks.len() {
                return Err(EvalError::Table(format!(
                    "model {m}: {} scores for {} benchmarks",
                    row.len(),
                    benchmarks.len()
                )));
            }
            if let Some((j, v)) = row.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                return Err(EvalError::Table(format!("model {m}, {}: score {v}", benchmarks[j].name)));
            }
        }
        for b in &benchmarks {
            if !(b.scale_divisor.is_finite() && b.scale_divisor > 0.0) {
                return Err(EvalError::Table(format!("{}: divisor {}", b.name, b.scale_divisor)));
            }
        }
        Ok(Self {
            models,
            benchmarks,
            scores,
        })
    }

    pub fn num_models(&self) -> usize {
        self.models.len()
    }

    pub fn num_benchmarks(&self) -> usize {
        self.benchmarks.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.scores.iter().map(|r| r[j]).collect()
    }

    /// Score after dividing by the benchmark's divisor.
    pub fn scaled(&self, m: usize, j: usize) -> f64 {
        self.scores[m][j] / self.benchmarks[j].scale_divisor
    }

    pub fn benchmark_index(&self, name: &str) -> Option<usize> {
        self.benchmarks.iter().position(|b| b.name == name)
    }

    /// Re-files benchmarks into the given categories by name.
    pub fn apply_overrides(&mut self, overrides: &IndexMap<String, BenchCategory>) {
        for b in &mut self.benchmarks {
            if let Some(&c) = overrides.get(&b.name) {
                b.category = c;
            }
        }
    }

    /// Scores CSV (`model,<bench>,...`) joined with a metadata CSV
    /// (`benchmark,category,divisor,num_choices,size[,paired]`). Column order
    /// follows the scores header.
    pub fn from_csv(scores: impl Read, meta: impl Read) -> Result<Self> {
        let mut meta_rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(meta);
        let mut by_name: IndexMap<String, BenchmarkMeta> = IndexMap::new();
        for rec in meta_rdr.deserialize::<BenchmarkMeta>() {
            let m = rec.map_err(|e| EvalError::Table(format!("metadata: {e}")))?;
            by_name.insert(m.name.clone(), m);
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(scores);
        let header = rdr.headers().map_err(|e| EvalError::Table(e.to_string()))?.clone();
        let benchmarks = header
            .iter()
            .skip(1)
            .map(|name| {
                by_name
                    .get(name)
                    .cloned()
                    .ok_or_else(|| EvalError::Table(format!("no metadata for benchmark {name:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut models = Vec::new();
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| EvalError::Table(e.to_string()))?;
            models.push(rec.get(0).unwrap_or_default().to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| EvalError::Table(format!("row {}: bad score {v:?}", line + 2)))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(models, benchmarks, rows)
    }

    pub fn from_csv_files(scores: impl AsRef<Path>, meta: impl AsRef<Path>) -> Result<Self> {
        let open = |p: &Path| std::fs::File::open(p).map_err(|e| EvalError::Table(format!("{}: {e}", p.display())));
        Self::from_csv(open(scores.as_ref())?, open(meta.as_ref())?)
    }
}

/// MMMU is filed under Knowledge regardless of where clustering puts it.
pub fn default_overrides() -> IndexMap<String, BenchCategory> {
    IndexMap::from([("MMMU".to_string(), BenchCategory::Knowledge)])
}
