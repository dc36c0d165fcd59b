use crate::numcore::{bilinear_resize, matmul, Tensor};

use super::{BaselineError, Result};

/// Maps the concatenated channels to the model width.
#[derive(Debug, Clone, PartialEq)]
pub enum Projector {
    /// `x·weight + bias`, weight `[Σd, C]`.
    Linear { weight: Tensor, bias: Option<Tensor> },
    /// Two linear layers with a ReLU between them.
    Mlp {
        w1: Tensor,
        b1: Tensor,
        w2: Tensor,
        b2: Tensor,
    },
}

impl Projector {
    pub fn identity(width: usize) -> Self {
        Projector::Linear {
            weight: Tensor::eye(width),
            bias: None,
        }
    }

    pub fn input_width(&self) -> usize {
        match self {
            Projector::Linear { weight, .. } => weight.shape()[0],
            Projector::Mlp { w1, .. } => w1.shape()[0],
        }
    }

    pub fn apply(&self, x: &Tensor) -> Result<Tensor> {
        match self {
            Projector::Linear { weight, bias } => {
                let y = matmul(x, weight)?;
                match bias {
                    Some(b) => add_bias(&y, b),
                    None => Ok(y),
                }
            }
            Projector::Mlp { w1, b1, w2, b2 } => {
                let h = add_bias(&matmul(x, w1)?, b1)?.map(|v| v.max(0.0));
                add_bias(&matmul(&h, w2)?, b2)
            }
        }
    }
}

fn add_bias(y: &Tensor, b: &Tensor) -> Result<Tensor> {
    let c = y.last_dim();
    if b.len() != c {
        return Err(BaselineError::Shape(format!(
            "bias of length {} for width {c}",
            b.len()
        )));
    }
    let mut out = y.clone();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        *v += b.data()[i % c];
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOutput {
    /// `[target_tokens, Σd_k]`
    pub tokens: Tensor,
    /// `[target_tokens, C]`
    pub projected: Tensor,
}

fn square_side(n: usize) -> Option<usize> {
    let s = (n as f64).sqrt().round() as usize;
    (s * s == n).then_some(s)
}

/// Resizes every `[n_k, d_k]` token map to `target_tokens` on a square
/// grid, concatenates channels and projects.
pub fn concat_ensemble(
    raw: &[Tensor],
    target_tokens: usize,
    projector: &Projector,
) -> Result<EnsembleOutput> {
    if raw.is_empty() {
        return Err(BaselineError::Empty);
    }
    let side = square_side(target_tokens).ok_or(BaselineError::Shape(format!(
        "target of {target_tokens} tokens is not a square grid"
    )))?;
    let mut flat = Vec::with_capacity(raw.len());
    for (k, map) in raw.iter().enumerate() {
        if map.rank() != 2 {
            return Err(BaselineError::Shape(format!(
                "encoder {k}: expected [tokens, d], got {:?}",
                map.shape()
            )));
        }
        let (n, d) = (map.rows(), map.last_dim());
        let s = square_side(n).ok_or(BaselineError::NonSquare {
            encoder: k,
            tokens: n,
        })?;
        let grid = map.reshape(&[s, s, d])?;
        let resized = if s == side {
            grid
        } else {
            bilinear_resize(&grid, side, side)?
        };
        flat.push(resized.reshape(&[target_tokens, d])?);
    }
    let parts: Vec<&Tensor> = flat.iter().collect();
    let tokens = Tensor::concat_cols(&parts)?;
    if projector.input_width() != tokens.last_dim() {
        return Err(BaselineError::Shape(format!(
            "projector takes {} channels, ensemble has {}",
            projector.input_width(),
            tokens.last_dim()
        )));
    }
    let projected = projector.apply(&tokens)?;
    Ok(EnsembleOutput { tokens, projected })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn native_size_is_untouched() {
        let m = Tensor::from_fn(&[576, 3], |i| i as f64);
        let out = concat_ensemble(std::slice::from_ref(&m), 576, &Projector::identity(3)).unwrap();
        assert_eq!(out.tokens, m);
        assert_eq!(out.projected.shape(), &[576, 3]);
    }

    #[test]
    fn channels_add_up() {
        let a = Tensor::zeros(&[16, 3]);
        let b = Tensor::zeros(&[64, 5]);
        let out = concat_ensemble(&[a, b], 36, &Projector::identity(8)).unwrap();
        assert_eq!(out.tokens.shape(), &[36, 8]);
    }

    #[test]
    fn non_square_rejected() {
        let a = Tensor::zeros(&[10, 2]);
        let e = concat_ensemble(&[a], 4, &Projector::identity(2)).unwrap_err();
        assert!(matches!(e, BaselineError::NonSquare { encoder: 0, tokens: 10 }));
    }

    #[test]
    fn mlp_applies_relu() {
        let p = Projector::Mlp {
            w1: Tensor::new(vec![1, 2], vec![1.0, -1.0]).unwrap(),
            b1: Tensor::zeros(&[2]),
            w2: Tensor::new(vec![2, 1], vec![1.0, 1.0]).unwrap(),
            b2: Tensor::full(&[1], 0.5),
        };
        let y = p.apply(&Tensor::new(vec![2, 1], vec![2.0, -3.0]).unwrap()).unwrap();
        assert_eq!(y.data(), &[2.5, 3.5]);
    }
}
