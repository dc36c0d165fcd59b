//! Grading and benchmark analytics.

mod analytics;
mod grade;
mod pca;
mod table;

pub use analytics::{category_scores, random_baseline, vision_gap_report, CategoryScores, GapEntry, VISION_GAP_THRESHOLD};
pub use grade::{
    fuzzy_match, grade_all, grade_llm, grader_prompt, grader_template, normalize, option_letter, parse_grade,
    parse_number, GradedResponse, Grade, Response, Verdict, NUMERIC_REL_TOL,
};
pub use pca::{correlation_matrix, kmeans, pca_cluster, BenchmarkPoint, ClusterReport, KMeansResult};
pub use table::{default_overrides, BenchCategory, BenchmarkMeta, ScoreTable};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("score table: {0}")]
    Table(String),
    #[error("grader reply could not be parsed: {0:?}")]
    UnparsableReply(String),
    #[error("grader client: {0}")]
    Client(String),
    #[error("category {0} has no benchmarks")]
    EmptyCategory(&'static str),
    #[error("random baseline for {benchmark}: {reason}")]
    Baseline { benchmark: String, reason: String },
    #[error("benchmark sets differ: {0}")]
    Mismatch(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, EvalError>;
