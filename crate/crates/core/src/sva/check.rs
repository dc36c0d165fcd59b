use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::numcore::{grad_check, GradCheckReport, NumError, Tensor, Var};

use super::adapt::EncoderFeatureMap;
use super::config::SvaConfig;
use super::error::Result;
use super::forward::{sva_forward, sva_forward_on_tape};
use super::mass::attention_mass_by_encoder;
use super::params::SvaParams;

/// Relative-error bound for the connector gradient check.
pub const GRAD_TOLERANCE: f64 = 1e-4;
/// Bound on `|Σ weights − 1|` for every query.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Standard-normal feature grids of the right shape for every encoder.
pub fn random_features(cfg: &SvaConfig, seed: u64) -> Vec<EncoderFeatureMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    cfg.multipliers
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let side = cfg.encoder_side(k);
            let grid = Tensor::from_fn(&[side, side, cfg.channels], |_| normal.sample(&mut rng));
            EncoderFeatureMap::new(k, m, grid)
        })
        .collect()
}

/// Fixed non-uniform weights so the scalar loss sees every output entry.
fn loss_weights(rows: usize, cols: usize) -> Tensor {
    Tensor::from_fn(&[rows, cols], |i| ((i as f64) * 0.7 + 0.3).sin())
}

/// Central-difference check of every connector parameter against the tape
/// gradient of `Σ out ⊙ W`.
pub fn sva_grad_check(
    features: &[EncoderFeatureMap],
    params: &SvaParams,
    cfg: &SvaConfig,
    eps: f64,
) -> Result<GradCheckReport> {
    params.validate(cfg)?;
    let weights = loss_weights(cfg.output_tokens(), cfg.channels);
    let report = grad_check(&params.named_tensors(), eps, |tape, vars: &[Var]| {
        let feats: Vec<Var> = features.iter().map(|f| tape.constant(f.grid.clone())).collect();
        let bound = params.bind_vars(vars);
        let (out, _) = sva_forward_on_tape(tape, &feats, &bound, cfg).map_err(|e| NumError::Invalid(e.to_string()))?;
        let w = tape.constant(weights.clone());
        let prod = tape.mul(out, w)?;
        Ok(tape.sum(prod))
    })?;
    Ok(report)
}

/// One line of a self-check report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: f64,
    pub pass: bool,
}

impl CheckRecord {
    fn new(name: impl Into<String>, value: f64, pass: bool) -> Self {
        Self {
            name: name.into(),
            value,
            pass,
        }
    }
}

/// Forward pass, attention normalization, per-encoder attention mass and a
/// full gradient check, each reported as a record.
pub fn sva_bench(
    features: &[EncoderFeatureMap],
    params: &SvaParams,
    cfg: &SvaConfig,
    eps: f64,
) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    let t0 = Instant::now();
    let fwd = sva_forward(features, params, cfg)?;
    let forward_s = t0.elapsed().as_secs_f64();
    let tokens = fwd.tokens.rows();
    out.push(CheckRecord::new("output_tokens", tokens as f64, tokens == cfg.output_tokens()));
    let finite = fwd.tokens.data().iter().all(|v| v.is_finite());
    out.push(CheckRecord::new("output_finite", f64::from(u8::from(finite)), finite));
    let worst = fwd
        .attention
        .records
        .iter()
        .flat_map(|r| &r.weights)
        .map(|w| (w.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    out.push(CheckRecord::new("attention_normalization_max_dev", worst, worst < NORMALIZATION_TOLERANCE));
    let mass = attention_mass_by_encoder(&fwd.attention)?;
    for (k, m) in mass.iter().enumerate() {
        out.push(CheckRecord::new(format!("attention_mass.encoder{k}"), *m, (0.0..=1.0).contains(m)));
    }
    let dev = (mass.iter().sum::<f64>() - 1.0).abs();
    out.push(CheckRecord::new("attention_mass_sum_dev", dev, dev < NORMALIZATION_TOLERANCE));
    out.push(CheckRecord::new("forward_seconds", forward_s, forward_s < 5.0));
    let t1 = Instant::now();
    let report = sva_grad_check(features, params, cfg, eps)?;
    let grad_s = t1.elapsed().as_secs_f64();
    out.push(CheckRecord::new(
        "grad_check_max_rel_err",
        report.max_rel_err(),
        report.max_rel_err() < GRAD_TOLERANCE,
    ));
    out.push(CheckRecord::new("grad_check_seconds", grad_s, grad_s < 60.0));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_instance_passes() {
        let cfg = SvaConfig::new(2, 3, vec![1, 2]).with_depth(2).with_groups(2);
        let feats = random_features(&cfg, 4);
        let params = SvaParams::init(&cfg, 9).unwrap();
        let recs = sva_bench(&feats, &params, &cfg, 1e-5).unwrap();
        assert!(recs.iter().all(|r| r.pass), "{recs:?}");
    }
}
