use std::sync::Arc;

use crate::numcore::{AttentionPattern, Tape, Tensor, Var};

use super::adapt::EncoderFeatureMap;
use super::config::SvaConfig;
use super::error::{Result, SvaError};
use super::mass::{AttentionLog, AttentionRecord};
use super::params::{bind_positional, validate_positional, BoundLayer, BoundParams, LayerParams, SvaParams};

/// The `L × L` query grid of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryGrid {
    /// The group's learnable token, `[C]`.
    pub latent: Tensor,
    /// Current query rows, `[L², C]`.
    pub expanded: Tensor,
    pub group_id: usize,
}

impl QueryGrid {
    /// Repeats `latent` over all `L²` positions.
    pub fn from_latent(latent: Tensor, query_side: usize, group_id: usize) -> Self {
        let c = latent.len();
        let expanded = Tensor::new(
            vec![query_side * query_side, c],
            latent.data().repeat(query_side * query_side),
        )
        .expect("positive sizes");
        Self {
            latent,
            expanded,
            group_id,
        }
    }
}

/// Connector output.
#[derive(Debug, Clone)]
pub struct SvaOutput {
    /// `[G·L², C]`, groups stacked along the token axis.
    pub tokens: Tensor,
    pub attention: AttentionLog,
}

/// Flat row indices (into a `[(mL)², C]` view of the grid) of the
/// `m × m` sub-region owned by query `(i, j)`, row-major.
pub fn sub_region_rows(multiplier: usize, query_side: usize, i: usize, j: usize) -> Vec<usize> {
    let side = multiplier * query_side;
    let mut rows = Vec::with_capacity(multiplier * multiplier);
    for a in 0..multiplier {
        for b in 0..multiplier {
            rows.push((multiplier * i + a) * side + multiplier * j + b);
        }
    }
    rows
}

/// The `m_k² × C` slice of `f` aligned with query `(i, j)`, with the
/// encoder's positional encoding added when given.
pub fn sub_region_view(
    f: &EncoderFeatureMap,
    i: usize,
    j: usize,
    positional: Option<&Tensor>,
) -> Result<Tensor> {
    let m = f.multiplier;
    let query_side = f.side() / m;
    if i >= query_side || j >= query_side {
        return Err(SvaError::OutOfRange {
            i,
            j,
            side: query_side,
        });
    }
    let c = f.grid.last_dim();
    let mut data = Vec::with_capacity(m * m * c);
    for (p, r) in sub_region_rows(m, query_side, i, j).into_iter().enumerate() {
        let row = f.grid.row(r);
        match positional {
            Some(pe) if m > 1 => {
                data.extend(row.iter().zip(pe.row(p)).map(|(a, b)| a + b));
            }
            _ => data.extend_from_slice(row),
        }
    }
    Ok(Tensor::new(vec![m * m, c], data)?)
}

/// Mean over every encoder's grid positions, then over encoders: `[C]`.
pub fn global_feature(features: &[EncoderFeatureMap]) -> Result<Tensor> {
    let first = features
        .first()
        .ok_or_else(|| SvaError::Config("no encoder features".into()))?;
    let c = first.grid.last_dim();
    let mut acc = vec![0.0; c];
    for f in features {
        let pooled = crate::numcore::global_mean_pool(&f.grid)?;
        for (a, p) in acc.iter_mut().zip(pooled.data()) {
            *a += p;
        }
    }
    acc.iter_mut().for_each(|a| *a /= features.len() as f64);
    Ok(Tensor::new(vec![c], acc)?)
}

/// Per-forward key/value context shared by every layer.
pub(crate) struct PreparedFeatures {
    /// `[Σ (m_k L)², C]`: all encoders' grids (plus positional encodings),
    /// stacked in encoder order.
    keyed: Vec<Var>,
    global: Option<Var>,
    pattern: Arc<AttentionPattern>,
    segments: Vec<usize>,
}

pub(crate) fn prepare_features(
    tape: &mut Tape,
    features: &[Var],
    positional: &[Option<Var>],
    cfg: &SvaConfig,
) -> Result<PreparedFeatures> {
    cfg.validate()?;
    if features.len() != cfg.num_encoders() {
        return Err(SvaError::Config(format!(
            "{} feature maps for {} configured encoders",
            features.len(),
            cfg.num_encoders()
        )));
    }
    let l = cfg.query_side;
    let c = cfg.channels;
    let mut keyed = Vec::with_capacity(features.len());
    let mut flats = Vec::with_capacity(features.len());
    for (k, &f) in features.iter().enumerate() {
        let side = cfg.encoder_side(k);
        let shape = tape.value(f).shape().to_vec();
        if shape != [side, side, c] {
            return Err(SvaError::Encoder {
                k,
                reason: format!("grid shape {shape:?}, expected {:?}", [side, side, c]),
            });
        }
        let flat = tape.reshape(f, &[side * side, c])?;
        flats.push(flat);
        let m = cfg.multipliers[k];
        let with_pe = match positional.get(k).copied().flatten() {
            Some(pe) if m > 1 => {
                let pe_rows = tape.reshape(pe, &[m * m, c])?;
                let tile: Arc<[usize]> = (0..side * side)
                    .map(|r| ((r / side) % m) * m + (r % side) % m)
                    .collect();
                let tiled = tape.gather_rows(pe_rows, tile)?;
                tape.add(flat, tiled)?
            }
            _ => flat,
        };
        keyed.push(with_pe);
    }

    let global = if cfg.global_query_augmentation {
        let pooled = flats
            .iter()
            .map(|&f| tape.mean_rows(f))
            .collect::<crate::numcore::Result<Vec<_>>>()?;
        let stacked = tape.concat_rows(&pooled)?;
        Some(tape.mean_rows(stacked)?)
    } else {
        None
    };

    let mut offsets = Vec::with_capacity(features.len());
    let mut total = 0;
    for k in 0..features.len() {
        offsets.push(total);
        total += cfg.encoder_side(k) * cfg.encoder_side(k);
    }
    let mut keys = Vec::with_capacity(l * l);
    for i in 0..l {
        for j in 0..l {
            let mut row = Vec::with_capacity(cfg.keys_per_query());
            for (k, &off) in offsets.iter().enumerate() {
                row.extend(
                    sub_region_rows(cfg.multipliers[k], l, i, j)
                        .into_iter()
                        .map(|r| r + off),
                );
            }
            keys.push(row);
        }
    }
    Ok(PreparedFeatures {
        keyed,
        global,
        pattern: Arc::new(AttentionPattern::new(keys)?),
        segments: cfg.multipliers.iter().map(|m| m * m).collect(),
    })
}

/// One spatially-aligned cross-attention layer on the tape.
///
/// `x` holds the `[L², C]` query rows. Keys and values for query `(i, j)`
/// are the projected sub-regions of every encoder, attended jointly.
pub(crate) fn cross_attend_on_tape(
    tape: &mut Tape,
    x: Var,
    prepared: &PreparedFeatures,
    layer: &BoundLayer,
    cfg: &SvaConfig,
) -> Result<(Var, AttentionRecord)> {
    let l2 = cfg.tokens_per_group();
    let xs = tape.value(x).shape().to_vec();
    if xs != [l2, cfg.channels] {
        return Err(SvaError::Config(format!(
            "query grid shape {xs:?}, expected {:?}",
            [l2, cfg.channels]
        )));
    }
    let query_in = match (prepared.global, layer.w_aug) {
        (Some(g), Some(w_aug)) => {
            let g_rows = tape.repeat_rows(g, l2)?;
            let cat = tape.concat_cols(&[x, g_rows])?;
            tape.matmul(cat, w_aug)?
        }
        (None, None) => x,
        _ => {
            return Err(SvaError::Param {
                name: "w_aug".into(),
                reason: "augmentation projection does not match the config".into(),
            })
        }
    };
    let q = tape.matmul(query_in, layer.w_q)?;
    let mut ks = Vec::with_capacity(prepared.keyed.len());
    let mut vs = Vec::with_capacity(prepared.keyed.len());
    for (k, &f) in prepared.keyed.iter().enumerate() {
        ks.push(tape.matmul(f, layer.w_k[k]).map_err(|e| SvaError::Encoder {
            k,
            reason: e.to_string(),
        })?);
        vs.push(tape.matmul(f, layer.w_v[k]).map_err(|e| SvaError::Encoder {
            k,
            reason: e.to_string(),
        })?);
    }
    let k_all = tape.concat_rows(&ks)?;
    let v_all = tape.concat_rows(&vs)?;
    let scale = 1.0 / (cfg.channels as f64).sqrt();
    let attended = tape.attention(q, k_all, v_all, prepared.pattern.clone(), scale)?;
    let record = AttentionRecord {
        weights: tape
            .attention_weights(attended)
            .expect("attention node")
            .to_vec(),
        segments: prepared.segments.clone(),
    };
    let out = if cfg.residual {
        tape.add(x, attended)?
    } else {
        attended
    };
    Ok((out, record))
}

/// Full connector on the tape: `G` groups of `D` layers, outputs stacked
/// along the token axis into `[G·L², C]`.
pub fn sva_forward_on_tape(
    tape: &mut Tape,
    features: &[Var],
    params: &BoundParams,
    cfg: &SvaConfig,
) -> Result<(Var, AttentionLog)> {
    let prepared = prepare_features(tape, features, &params.positional, cfg)?;
    let mut outputs = Vec::with_capacity(cfg.groups);
    let mut log = AttentionLog::default();
    for (latent, layers) in params.latents.iter().zip(&params.layers) {
        let mut x = tape.repeat_rows(*latent, cfg.tokens_per_group())?;
        for layer in layers {
            let (next, record) = cross_attend_on_tape(tape, x, &prepared, layer, cfg)?;
            log.records.push(record);
            x = next;
        }
        outputs.push(x);
    }
    Ok((tape.concat_rows(&outputs)?, log))
}

/// Runs the connector on plain tensors.
pub fn sva_forward(
    features: &[EncoderFeatureMap],
    params: &SvaParams,
    cfg: &SvaConfig,
) -> Result<SvaOutput> {
    params.validate(cfg)?;
    check_features(features, cfg)?;
    let mut tape = Tape::new();
    let vars: Vec<Var> = features
        .iter()
        .map(|f| tape.constant(f.grid.clone()))
        .collect();
    let bound = params.bind(&mut tape, false);
    let (out, attention) = sva_forward_on_tape(&mut tape, &vars, &bound, cfg)?;
    Ok(SvaOutput {
        tokens: tape.value(out).clone(),
        attention,
    })
}

/// One layer on plain tensors.
pub fn sva_cross_attend(
    x: &QueryGrid,
    features: &[EncoderFeatureMap],
    layer: &LayerParams,
    positional: &[Option<Tensor>],
    cfg: &SvaConfig,
) -> Result<(QueryGrid, AttentionRecord)> {
    check_features(features, cfg)?;
    layer.validate(cfg, "layer")?;
    validate_positional(positional, cfg)?;
    let mut tape = Tape::new();
    let vars: Vec<Var> = features
        .iter()
        .map(|f| tape.constant(f.grid.clone()))
        .collect();
    let pos = bind_positional(positional, &mut tape, false);
    let prepared = prepare_features(&mut tape, &vars, &pos, cfg)?;
    let bound = layer.bind(&mut tape, "layer", false);
    let xv = tape.constant(x.expanded.clone());
    let (out, record) = cross_attend_on_tape(&mut tape, xv, &prepared, &bound, cfg)?;
    Ok((
        QueryGrid {
            latent: x.latent.clone(),
            expanded: tape.value(out).clone(),
            group_id: x.group_id,
        },
        record,
    ))
}

pub(crate) fn check_features(features: &[EncoderFeatureMap], cfg: &SvaConfig) -> Result<()> {
    if features.len() != cfg.num_encoders() {
        return Err(SvaError::Config(format!(
            "{} feature maps for {} configured encoders",
            features.len(),
            cfg.num_encoders()
        )));
    }
    features
        .iter()
        .enumerate()
        .try_for_each(|(k, f)| f.check(cfg, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn indexed_map(m: usize, l: usize, c: usize) -> EncoderFeatureMap {
        let side = m * l;
        EncoderFeatureMap::new(0, m, Tensor::from_fn(&[side, side, c], |i| i as f64))
    }

    #[test]
    fn unit_multiplier_view_is_single_cell() {
        let f = indexed_map(1, 3, 2);
        let v = sub_region_view(&f, 1, 2, None).unwrap();
        assert_eq!(v.shape(), &[1, 2]);
        assert_eq!(v.data(), f.grid.row(5));
    }

    #[test]
    fn view_picks_aligned_block() {
        // 4x4 grid of position indices, m = 2, L = 2
        let f = indexed_map(2, 2, 1);
        let v = sub_region_view(&f, 0, 1, None).unwrap();
        // rows 0-1, cols 2-3 → flat positions 2, 3, 6, 7
        let mut expected = Vec::new();
        for r in 0..2 {
            for c in 2..4 {
                expected.push((r * 4 + c) as f64);
            }
        }
        assert_eq!(v.data(), expected.as_slice());
    }

    #[test]
    fn views_tile_the_grid() {
        for (m, l) in [(1, 3), (2, 2), (3, 2), (2, 3)] {
            let side = m * l;
            let mut seen = vec![0usize; side * side];
            for i in 0..l {
                for j in 0..l {
                    for r in sub_region_rows(m, l, i, j) {
                        seen[r] += 1;
                    }
                }
            }
            assert!(seen.iter().all(|&n| n == 1), "m={m} l={l}");
        }
    }

    #[test]
    fn view_out_of_range() {
        let f = indexed_map(2, 2, 1);
        assert!(matches!(
            sub_region_view(&f, 2, 0, None),
            Err(SvaError::OutOfRange { .. })
        ));
    }

    #[test]
    fn positional_encoding_added_to_view() {
        let f = indexed_map(2, 1, 1);
        let pe = Tensor::new(vec![2, 2, 1], vec![10.0, 20.0, 30.0, 40.0]).unwrap();
        let v = sub_region_view(&f, 0, 0, Some(&pe)).unwrap();
        assert_eq!(v.data(), &[10.0, 21.0, 32.0, 43.0]);
    }

    #[test]
    fn single_key_passes_feature_through() {
        let mut cfg = SvaConfig::new(3, 2, vec![1]);
        cfg.residual = false;
        let f = EncoderFeatureMap::new(0, 1, Tensor::from_fn(&[3, 3, 2], |i| i as f64 * 0.7 - 2.0));
        let params = SvaParams::identity(&cfg, vec![Tensor::from_fn(&[2], |i| i as f64)]).unwrap();
        let out = sva_forward(std::slice::from_ref(&f), &params, &cfg).unwrap();
        assert_eq!(out.tokens.data(), f.grid.data());
    }

    #[test]
    fn zero_values_give_zero_with_uniform_weights() {
        let mut cfg = SvaConfig::new(1, 1, vec![2]);
        cfg.residual = false;
        let f = EncoderFeatureMap::new(0, 2, Tensor::zeros(&[2, 2, 1]));
        let params = SvaParams::identity(&cfg, vec![Tensor::full(&[1], 0.3)]).unwrap();
        let out = sva_forward(std::slice::from_ref(&f), &params, &cfg).unwrap();
        assert_eq!(out.tokens.data(), &[0.0]);
        assert_eq!(out.attention.records[0].weights[0], vec![0.25; 4]);
    }

    #[test]
    fn wrong_grid_names_encoder() {
        let cfg = SvaConfig::new(2, 2, vec![1, 2]);
        let params = SvaParams::init(&cfg, 0).unwrap();
        let feats = vec![
            EncoderFeatureMap::new(0, 1, Tensor::zeros(&[2, 2, 2])),
            EncoderFeatureMap::new(1, 2, Tensor::zeros(&[3, 3, 2])),
        ];
        let e = sva_forward(&feats, &params, &cfg).unwrap_err();
        assert!(matches!(e, SvaError::Encoder { k: 1, .. }), "{e}");
    }
}
