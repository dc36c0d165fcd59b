use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::numcore::{Tape, Tensor, Var};

use super::adapt::EncoderFeatureMap;
use super::config::SvaConfig;
use super::error::{Result, SvaError};
use super::forward::{check_features, cross_attend_on_tape, prepare_features};
use super::params::{bind_positional, validate_positional, LayerParams, SvaParams};

/// Insertion strides used by the three released model sizes.
pub const PRESET_HOST_STRIDES: [(&str, usize); 3] = [("8B", 3), ("13B", 4), ("34B", 9)];

/// `h ← h + h·weight + bias`
#[derive(Debug, Clone, PartialEq)]
pub struct AffineBlock {
    pub weight: Tensor,
    pub bias: Tensor,
}

/// Stand-in for a language model: a stack of residual affine blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct HostStub {
    pub blocks: Vec<AffineBlock>,
}

impl HostStub {
    /// Blocks with `N(0, scale²)` weights and biases.
    pub fn perturbed(layers: usize, channels: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, scale).expect("valid scale");
        let blocks = (0..layers)
            .map(|_| AffineBlock {
                weight: Tensor::from_fn(&[channels, channels], |_| normal.sample(&mut rng)),
                bias: Tensor::from_fn(&[channels], |_| normal.sample(&mut rng)),
            })
            .collect();
        Self { blocks }
    }

    pub fn num_layers(&self) -> usize {
        self.blocks.len()
    }

    /// Plain forward without any insertion.
    pub fn forward(&self, hidden: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let mut h = tape.constant(hidden.clone());
        for block in &self.blocks {
            h = apply_block(&mut tape, h, block)?;
        }
        Ok(tape.value(h).clone())
    }
}

fn apply_block(tape: &mut Tape, h: Var, block: &AffineBlock) -> Result<Var> {
    let w = tape.constant(block.weight.clone());
    let b = tape.constant(block.bias.clone());
    let hw = tape.matmul(h, w)?;
    let shifted = tape.add_row(hw, b)?;
    Ok(tape.add(h, shifted)?)
}

/// Rows of the host sequence that hold the visual tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VisualSpan {
    pub start: usize,
    pub len: usize,
}

/// One single-layer cross-attention per insertion point.
#[derive(Debug, Clone, PartialEq)]
pub struct HostInsertParams {
    pub layers: Vec<LayerParams>,
    pub positional: Vec<Option<Tensor>>,
}

impl HostInsertParams {
    /// Seeded parameters for every insertion point of a `host_layers`-deep host.
    pub fn init(cfg: &SvaConfig, host_layers: usize, seed: u64) -> Result<Self> {
        let host_cfg = cfg.for_host_insertion().with_groups(1).with_depth(insertion_count(cfg, host_layers).max(1));
        let p = SvaParams::init(&host_cfg, seed)?;
        let count = insertion_count(cfg, host_layers);
        Ok(Self {
            layers: p.layers.into_iter().flatten().take(count).collect(),
            positional: p.positional,
        })
    }
}

fn insertion_count(cfg: &SvaConfig, host_layers: usize) -> usize {
    cfg.host_stride.map_or(0, |s| host_layers / s)
}

#[derive(Debug, Clone)]
pub struct HostOutput {
    pub hidden: Tensor,
    /// 1-based host layer indices after which a cross-attention ran.
    pub insertions: Vec<usize>,
}

/// Runs the host stub, re-attending the visual rows to the uncompressed
/// encoder features after every host layer whose 1-based index is a
/// multiple of `cfg.host_stride`. Non-visual rows are never touched by an
/// insertion.
pub fn host_insert_forward(
    hidden: &Tensor,
    span: VisualSpan,
    features: &[EncoderFeatureMap],
    params: &HostInsertParams,
    cfg: &SvaConfig,
    host: &HostStub,
) -> Result<HostOutput> {
    let host_cfg = SvaConfig {
        residual: true,
        ..cfg.for_host_insertion()
    };
    host_cfg.validate()?;
    check_features(features, &host_cfg)?;
    validate_positional(&params.positional, &host_cfg)?;
    let l2 = host_cfg.tokens_per_group();
    if span.len != l2 {
        return Err(SvaError::Span {
            got: span.len,
            expected: l2,
        });
    }
    let (t, c) = (hidden.rows(), hidden.last_dim());
    if hidden.rank() != 2 || c != host_cfg.channels || span.start + span.len > t {
        return Err(SvaError::Config(format!(
            "hidden state {:?} cannot hold a {}-row visual span at {} with width {}",
            hidden.shape(),
            span.len,
            span.start,
            host_cfg.channels
        )));
    }
    let expected = insertion_count(&host_cfg, host.num_layers());
    if params.layers.len() != expected {
        return Err(SvaError::Param {
            name: "host.layers".into(),
            reason: format!(
                "{} insertion layers for {expected} insertion points",
                params.layers.len()
            ),
        });
    }
    for (n, layer) in params.layers.iter().enumerate() {
        layer.validate(&host_cfg, &format!("host.{n}"))?;
    }

    let mut tape = Tape::new();
    let feats: Vec<Var> = features
        .iter()
        .map(|f| tape.constant(f.grid.clone()))
        .collect();
    let pos = bind_positional(&params.positional, &mut tape, false);
    let prepared = prepare_features(&mut tape, &feats, &pos, &host_cfg)?;
    let span_rows: Arc<[usize]> = (span.start..span.start + span.len).collect();
    let merge: Arc<[usize]> = (0..t)
        .map(|r| {
            if (span.start..span.start + span.len).contains(&r) {
                t + r - span.start
            } else {
                r
            }
        })
        .collect();

    let mut h = tape.constant(hidden.clone());
    let mut insertions = Vec::new();
    let mut next_param = params.layers.iter();
    for (idx, block) in host.blocks.iter().enumerate() {
        h = apply_block(&mut tape, h, block)?;
        let layer_no = idx + 1;
        if host_cfg.host_stride.is_some_and(|s| layer_no % s == 0) {
            let layer = next_param.next().expect("count checked above");
            let bound = layer.bind(&mut tape, &format!("host.{}", insertions.len()), false);
            let visual = tape.gather_rows(h, span_rows.clone())?;
            let (updated, _) = cross_attend_on_tape(&mut tape, visual, &prepared, &bound, &host_cfg)?;
            let stacked = tape.concat_rows(&[h, updated])?;
            h = tape.gather_rows(stacked, merge.clone())?;
            insertions.push(layer_no);
        }
    }
    Ok(HostOutput {
        hidden: tape.value(h).clone(),
        insertions,
    })
}
