use serde::{Deserialize, Serialize};

use super::error::{Result, SvaError};

/// Shape and feature switches for one aggregator instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SvaConfig {
    /// Side `L` of the query grid; the connector emits `L * L` tokens per group.
    pub query_side: usize,
    /// Hidden width `C`.
    pub channels: usize,
    /// Per-encoder multiplier `m_k`; encoder `k` has a `m_k L × m_k L` grid.
    pub multipliers: Vec<usize>,
    #[serde(default = "one")]
    pub depth: usize,
    #[serde(default = "one")]
    pub groups: usize,
    /// Insert a cross-attention every `host_stride` host layers.
    #[serde(default)]
    pub host_stride: Option<usize>,
    #[serde(default)]
    pub positional_encoding: bool,
    #[serde(default)]
    pub global_query_augmentation: bool,
    #[serde(default = "yes")]
    pub residual: bool,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl SvaConfig {
    pub fn new(query_side: usize, channels: usize, multipliers: Vec<usize>) -> Self {
        Self {
            query_side,
            channels,
            multipliers,
            depth: 1,
            groups: 1,
            host_stride: None,
            positional_encoding: false,
            global_query_augmentation: false,
            residual: true,
        }
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    pub fn with_groups(mut self, groups: usize) -> Self {
        self.groups = groups;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SvaError::Config(m.to_string()));
        if self.query_side == 0 {
            return bad("query_side must be >= 1");
        }
        if self.channels == 0 {
            return bad("channels must be >= 1");
        }
        if self.depth == 0 || self.groups == 0 {
            return bad("depth and groups must be >= 1");
        }
        if self.multipliers.is_empty() {
            return bad("at least one encoder is required");
        }
        if let Some(k) = self.multipliers.iter().position(|&m| m == 0) {
            return Err(SvaError::Encoder {
                k,
                reason: "multiplier must be a positive integer".into(),
            });
        }
        if self.host_stride == Some(0) {
            return bad("host_stride must be positive");
        }
        Ok(())
    }

    pub fn num_encoders(&self) -> usize {
        self.multipliers.len()
    }

    /// Side of encoder `k`'s feature grid, `m_k · L`.
    pub fn encoder_side(&self, k: usize) -> usize {
        self.multipliers[k] * self.query_side
    }

    pub fn tokens_per_group(&self) -> usize {
        self.query_side * self.query_side
    }

    pub fn output_tokens(&self) -> usize {
        self.groups * self.tokens_per_group()
    }

    /// Keys seen by one query: `Σ m_k²`.
    pub fn keys_per_query(&self) -> usize {
        self.multipliers.iter().map(|m| m * m).sum()
    }

    /// Cross-attention inside the host always runs with one layer and one group.
    pub fn for_host_insertion(&self) -> Self {
        Self {
            depth: 1,
            groups: 1,
            ..self.clone()
        }
    }
}
