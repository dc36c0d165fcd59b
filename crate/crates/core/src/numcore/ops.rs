//! Plain (non-taped) tensor operations.

use super::error::{NumError, Result};
use super::tensor::Tensor;

/// Matrix product of `[m, k] × [k, n]`.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0] {
        return Err(NumError::Dimension {
            op: "matmul",
            left: a.shape().to_vec(),
            right: b.shape().to_vec(),
        });
    }
    let (m, k, n) = (a.shape()[0], a.shape()[1], b.shape()[1]);
    let (ad, bd) = (a.data(), b.data());
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = ad[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &bd[p * n..(p + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    Tensor::new(vec![m, n], out)
}

/// Softmax over the last axis, max-shifted for stability.
pub fn softmax_last(x: &Tensor) -> Result<Tensor> {
    let n = x.last_dim();
    let mut out = x.clone();
    for row in out.data_mut().chunks_mut(n) {
        softmax_in_place(row);
    }
    Ok(out)
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in row.iter_mut() {
        *v /= total;
    }
}

/// One output sample along an axis: `src[lo] + frac * (src[hi] - src[lo])`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AxisTap {
    pub lo: usize,
    pub hi: usize,
    pub frac: f64,
}

/// Half-pixel-center source taps (corners not aligned), clamped at the border.
pub(crate) fn axis_taps(input: usize, output: usize) -> Vec<AxisTap> {
    let scale = input as f64 / output as f64;
    (0..output)
        .map(|o| {
            let src = ((o as f64 + 0.5) * scale - 0.5).max(0.0);
            let lo = (src.floor() as usize).min(input - 1);
            let hi = (lo + 1).min(input - 1);
            let frac = if hi == lo { 0.0 } else { src - lo as f64 };
            AxisTap { lo, hi, frac }
        })
        .collect()
}

/// Bilinear resize of an `[h, w, c]` grid with half-pixel centers.
pub fn bilinear_resize(grid: &Tensor, target_h: usize, target_w: usize) -> Result<Tensor> {
    if grid.rank() != 3 {
        return Err(NumError::Shape {
            shape: grid.shape().to_vec(),
            reason: "bilinear_resize expects [h, w, c]".into(),
        });
    }
    if target_h == 0 || target_w == 0 {
        return Err(NumError::Invalid(format!(
            "resize target must be positive, got {target_h}x{target_w}"
        )));
    }
    let (h, w, c) = (grid.shape()[0], grid.shape()[1], grid.shape()[2]);
    let rows = axis_taps(h, target_h);
    let cols = axis_taps(w, target_w);
    let src = grid.data();
    let mut out = vec![0.0; target_h * target_w * c];
    for (oy, ty) in rows.iter().enumerate() {
        for (ox, tx) in cols.iter().enumerate() {
            // Lerp form so equal neighbours reproduce their value exactly.
            let px = |y: usize, x: usize| &src[(y * w + x) * c..(y * w + x + 1) * c];
            let (a, b) = (px(ty.lo, tx.lo), px(ty.lo, tx.hi));
            let (d0, d1) = (px(ty.hi, tx.lo), px(ty.hi, tx.hi));
            let dst = &mut out[(oy * target_w + ox) * c..(oy * target_w + ox + 1) * c];
            for ch in 0..c {
                let top = a[ch] + (b[ch] - a[ch]) * tx.frac;
                let bottom = d0[ch] + (d1[ch] - d0[ch]) * tx.frac;
                dst[ch] = top + (bottom - top) * ty.frac;
            }
        }
    }
    Tensor::new(vec![target_h, target_w, c], out)
}

/// Channel-wise mean over the spatial positions of an `[h, w, c]` grid.
pub fn global_mean_pool(grid: &Tensor) -> Result<Tensor> {
    if grid.rank() != 3 {
        return Err(NumError::Shape {
            shape: grid.shape().to_vec(),
            reason: "global_mean_pool expects [h, w, c]".into(),
        });
    }
    let c = grid.last_dim();
    let n = grid.rows();
    let mut out = vec![0.0; c];
    for r in 0..n {
        for (o, v) in out.iter_mut().zip(grid.row(r)) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|v| *v /= n as f64);
    Tensor::new(vec![c], out)
}
