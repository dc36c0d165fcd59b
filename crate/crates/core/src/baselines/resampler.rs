use std::sync::Arc;

use crate::numcore::{AttentionPattern, Tape, Tensor, Var};

use super::{BaselineError, Result};

/// Position-wise feed-forward block, `x + relu(x·w1 + b1)·w2 + b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ffn {
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
}

/// Single cross-attention from `R` learned latents to every feature token.
/// The feed-forward block is off unless `ffn` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct ResamplerParams {
    pub w_q: Tensor,
    pub w_k: Tensor,
    pub w_v: Tensor,
    pub ffn: Option<Ffn>,
}

impl ResamplerParams {
    pub fn identity(channels: usize) -> Self {
        Self {
            w_q: Tensor::eye(channels),
            w_k: Tensor::eye(channels),
            w_v: Tensor::eye(channels),
            ffn: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.w_q.last_dim()
    }

    /// Puts the weights on `tape`, as trainable parameters when `trainable`.
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> ResamplerVars {
        let mut put = |name: &str, t: &Tensor| {
            if trainable {
                tape.param(format!("resampler.{name}"), t.clone()).1
            } else {
                tape.constant(t.clone())
            }
        };
        ResamplerVars {
            w_q: put("w_q", &self.w_q),
            w_k: put("w_k", &self.w_k),
            w_v: put("w_v", &self.w_v),
            ffn: self.ffn.as_ref().map(|f| {
                [
                    put("ffn.w1", &f.w1),
                    put("ffn.b1", &f.b1),
                    put("ffn.w2", &f.w2),
                    put("ffn.b2", &f.b2),
                ]
            }),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ResamplerVars {
    pub w_q: Var,
    pub w_k: Var,
    pub w_v: Var,
    pub ffn: Option<[Var; 4]>,
}

pub fn resampler_on_tape(
    tape: &mut Tape,
    latents: Var,
    tokens: Var,
    params: &ResamplerVars,
) -> Result<Var> {
    let r = tape.value(latents).rows();
    let n = tape.value(tokens).rows();
    let c = tape.value(params.w_q).last_dim();
    let q = tape.matmul(latents, params.w_q)?;
    let k = tape.matmul(tokens, params.w_k)?;
    let v = tape.matmul(tokens, params.w_v)?;
    let pattern = Arc::new(AttentionPattern::global(r, n)?);
    let mut out = tape.attention(q, k, v, pattern, 1.0 / (c as f64).sqrt())?;
    if let Some([w1, b1, w2, b2]) = params.ffn {
        let h = tape.matmul(out, w1)?;
        let h = tape.add_row(h, b1)?;
        let h = tape.relu(h);
        let h = tape.matmul(h, w2)?;
        let h = tape.add_row(h, b2)?;
        out = tape.add(out, h)?;
    }
    Ok(out)
}

/// `latents` is `[R, C]`; `features` are `[n_k, C]` token lists from any
/// number of encoders, attended jointly with no masking.
pub fn resampler(latents: &Tensor, features: &[Tensor], params: &ResamplerParams) -> Result<Tensor> {
    if features.iter().all(|f| f.rows() == 0) {
        return Err(BaselineError::Empty);
    }
    let c = params.channels();
    if latents.rank() != 2 || latents.rows() == 0 || latents.last_dim() != c {
        return Err(BaselineError::Shape(format!(
            "latents {:?}, expected [R >= 1, {c}]",
            latents.shape()
        )));
    }
    for (k, f) in features.iter().enumerate() {
        if f.rank() != 2 || f.last_dim() != c {
            return Err(BaselineError::Shape(format!(
                "encoder {k}: tokens {:?}, expected [n, {c}]",
                f.shape()
            )));
        }
    }
    let parts: Vec<&Tensor> = features.iter().filter(|f| f.rows() > 0).collect();
    let mut tape = Tape::new();
    let l = tape.constant(latents.clone());
    let t = tape.constant(Tensor::concat_rows(&parts)?);
    let vars = params.bind(&mut tape, false);
    let out = resampler_on_tape(&mut tape, l, t, &vars)?;
    Ok(tape.value(out).clone())
}
