//! Comparison connectors: interpolate-and-concatenate ensembles and a
//! global resampler with no spatial structure.

mod ensemble;
mod resampler;

pub use ensemble::{concat_ensemble, EnsembleOutput, Projector};
pub use resampler::{resampler, resampler_on_tape, Ffn, ResamplerParams, ResamplerVars};

use crate::numcore::NumError;

#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error("encoder {encoder}: {tokens} tokens is not a square grid")]
    NonSquare { encoder: usize, tokens: usize },
    #[error("no feature maps given")]
    Empty,
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Num(#[from] NumError),
}

pub type Result<T> = std::result::Result<T, BaselineError>;
