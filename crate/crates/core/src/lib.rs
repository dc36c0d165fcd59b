//! Multi-encoder vision connector math, vision-centric VQA generation,
//! instruction-data curation and evaluation analytics.

pub mod jsonl;
pub mod numcore;
pub mod seed;
pub mod sva;
pub mod baselines;
pub mod cvbench;
pub mod curator;
pub mod eval;
pub mod review;
