use crate::numcore::{bilinear_resize, matmul, Tensor};

use super::config::SvaConfig;
use super::error::{Result, SvaError};

/// One encoder's feature grid after resizing to `m_k·L` per side and
/// projecting to `C` channels.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderFeatureMap {
    pub index: usize,
    pub multiplier: usize,
    /// `[m_k·L, m_k·L, C]`
    pub grid: Tensor,
}

impl EncoderFeatureMap {
    pub fn new(index: usize, multiplier: usize, grid: Tensor) -> Self {
        Self {
            index,
            multiplier,
            grid,
        }
    }

    pub fn side(&self) -> usize {
        self.grid.shape()[0]
    }

    /// Checks the grid against the config's expectations for encoder `k`.
    pub fn check(&self, cfg: &SvaConfig, k: usize) -> Result<()> {
        let err = |reason: String| SvaError::Encoder { k, reason };
        let m = *cfg
            .multipliers
            .get(k)
            .ok_or_else(|| err(format!("config lists only {} encoders", cfg.num_encoders())))?;
        if self.multiplier != m {
            return Err(err(format!(
                "multiplier {} does not match config {m}",
                self.multiplier
            )));
        }
        let side = cfg.encoder_side(k);
        let expected = [side, side, cfg.channels];
        if self.grid.shape() != expected {
            return Err(err(format!(
                "grid shape {:?}, expected {expected:?}",
                self.grid.shape()
            )));
        }
        Ok(())
    }
}

/// Resizes `raw` (`[h, w, d_k]`) to encoder `k`'s side and maps `d_k → C`
/// through `channel_map` (`[d_k, C]`).
pub fn adapt_encoder_output(
    raw: &Tensor,
    cfg: &SvaConfig,
    k: usize,
    channel_map: &Tensor,
) -> Result<EncoderFeatureMap> {
    adapt_multi_stage(std::slice::from_ref(raw), cfg, k, channel_map)
}

/// Resizes every stage to encoder `k`'s side, concatenates them along the
/// channel axis and projects the result to `C`.
pub fn adapt_multi_stage(
    stages: &[Tensor],
    cfg: &SvaConfig,
    k: usize,
    channel_map: &Tensor,
) -> Result<EncoderFeatureMap> {
    cfg.validate()?;
    let err = |reason: String| SvaError::Encoder { k, reason };
    if k >= cfg.num_encoders() {
        return Err(err(format!("config lists only {} encoders", cfg.num_encoders())));
    }
    if stages.is_empty() {
        return Err(err("no feature stages given".into()));
    }
    let side = cfg.encoder_side(k);
    let mut resized = Vec::with_capacity(stages.len());
    for (s, stage) in stages.iter().enumerate() {
        if stage.rank() != 3 {
            return Err(err(format!(
                "stage {s} has shape {:?}, expected [h, w, d]",
                stage.shape()
            )));
        }
        resized.push(if stage.shape()[0] == side && stage.shape()[1] == side {
            stage.clone()
        } else {
            bilinear_resize(stage, side, side)?
        });
    }
    let parts: Vec<&Tensor> = resized.iter().collect();
    let stacked = Tensor::concat_cols(&parts)?;
    let width = stacked.last_dim();
    if channel_map.rank() != 2
        || channel_map.shape()[0] != width
        || channel_map.shape()[1] != cfg.channels
    {
        return Err(err(format!(
            "channel map {:?} cannot map {width} input channels to {}",
            channel_map.shape(),
            cfg.channels
        )));
    }
    let flat = stacked.reshape(&[side * side, width])?;
    let grid = matmul(&flat, channel_map)?.reshape(&[side, side, cfg.channels])?;
    Ok(EncoderFeatureMap::new(k, cfg.multipliers[k], grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_map_keeps_grid() {
        let cfg = SvaConfig::new(4, 3, vec![1]);
        let raw = Tensor::from_fn(&[4, 4, 3], |i| i as f64);
        let f = adapt_encoder_output(&raw, &cfg, 0, &Tensor::eye(3)).unwrap();
        assert_eq!(f.grid, raw);
    }

    #[test]
    fn constant_survives_upsampling() {
        let cfg = SvaConfig::new(3, 2, vec![3]);
        let raw = Tensor::full(&[6, 6, 2], 1.25);
        let f = adapt_encoder_output(&raw, &cfg, 0, &Tensor::eye(2)).unwrap();
        assert_eq!(f.grid.shape(), &[9, 9, 2]);
        assert!(f.grid.data().iter().all(|&v| (v - 1.25).abs() < 1e-15));
    }

    #[test]
    fn four_stages_fuse_to_one_map() {
        let cfg = SvaConfig::new(24, 8, vec![1, 4]);
        let dims = [2, 3, 4, 5];
        let sizes = [48, 24, 12, 6];
        let stages: Vec<Tensor> = dims
            .iter()
            .zip(sizes)
            .map(|(&d, s)| Tensor::full(&[s, s, d], 1.0))
            .collect();
        let map = Tensor::full(&[14, 8], 0.5);
        let f = adapt_multi_stage(&stages, &cfg, 1, &map).unwrap();
        assert_eq!(f.grid.shape(), &[96, 96, 8]);
        assert!(f.grid.data().iter().all(|&v| (v - 7.0).abs() < 1e-12));
    }

    #[test]
    fn channel_mismatch_is_reported() {
        let cfg = SvaConfig::new(2, 4, vec![1]);
        let raw = Tensor::zeros(&[2, 2, 3]);
        let e = adapt_encoder_output(&raw, &cfg, 0, &Tensor::eye(4)).unwrap_err();
        assert!(matches!(e, SvaError::Encoder { k: 0, .. }), "{e}");
    }
}
