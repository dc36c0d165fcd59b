//! Reference implementations written with plain loops over nested vectors.
//! They share no code with the library beyond its public data types.
#![allow(dead_code)]

use forge_core::cvbench::{Scene, SceneObject};
use forge_core::numcore::Tensor;
use forge_core::sva::{EncoderFeatureMap, SvaConfig, SvaParams};

pub type Mat = Vec<Vec<f64>>;

pub fn to_mat(t: &Tensor) -> Mat {
    let c = t.last_dim();
    t.data().chunks(c).map(<[f64]>::to_vec).collect()
}

pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let n = b[0].len();
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| row.iter().zip(b).map(|(x, brow)| x * brow[j]).sum())
                .collect()
        })
        .collect()
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    assert_eq!(a.len(), b.len(), "row count");
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| {
            assert_eq!(x.len(), y.len(), "column count");
            x.iter().zip(y).map(|(p, q)| (p - q).abs())
        })
        .fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Softmax attention of every query over the keys where `mask[q][key]` is
/// true. Logits of excluded keys never enter the normalizer.
pub fn masked_attention(q: &Mat, k: &Mat, v: &Mat, mask: &[Vec<bool>], scale: f64) -> (Mat, Mat) {
    let mut out = Vec::with_capacity(q.len());
    let mut weights = Vec::with_capacity(q.len());
    for (qi, qrow) in q.iter().enumerate() {
        let logits: Vec<Option<f64>> = k
            .iter()
            .enumerate()
            .map(|(j, krow)| mask[qi][j].then(|| dot(qrow, krow) * scale))
            .collect();
        let max = logits.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| l.map_or(0.0, |l| (l - max).exp())).collect();
        let z: f64 = exps.iter().sum();
        let w: Vec<f64> = exps.iter().map(|e| e / z).collect();
        let mut o = vec![0.0; v[0].len()];
        for (wj, vrow) in w.iter().zip(v) {
            for (oc, x) in o.iter_mut().zip(vrow) {
                *oc += wj * x;
            }
        }
        out.push(o);
        weights.push(w);
    }
    (out, weights)
}

/// Aggregator output computed with one dense masked attention per layer.
///
/// Keys of all encoders are laid out side by side; query `(i, j)` may see
/// key `(y, x)` of encoder `k` exactly when `y / m_k == i` and
/// `x / m_k == j`. Returns `[G·L², C]` rows.
pub fn dense_sva(features: &[EncoderFeatureMap], params: &SvaParams, cfg: &SvaConfig) -> Mat {
    let l = cfg.query_side;
    let c = cfg.channels;
    let scale = 1.0 / (c as f64).sqrt();

    // Keyed rows per encoder, with the positional encoding tiled in.
    let mut keyed: Vec<Mat> = Vec::new();
    let mut owners: Vec<(usize, usize)> = Vec::new();
    let mut global = vec![0.0; c];
    for (k, f) in features.iter().enumerate() {
        let m = cfg.multipliers[k];
        let side = m * l;
        let mut rows = Vec::new();
        let mut mean = vec![0.0; c];
        for y in 0..side {
            for x in 0..side {
                let cell: Vec<f64> = (0..c).map(|ch| f.grid.get(&[y, x, ch])).collect();
                for (acc, v) in mean.iter_mut().zip(&cell) {
                    *acc += v / (side * side) as f64;
                }
                let with_pe: Vec<f64> = match params.positional.get(k).and_then(Option::as_ref) {
                    Some(pe) if m > 1 => (0..c).map(|ch| cell[ch] + pe.get(&[y % m, x % m, ch])).collect(),
                    _ => cell,
                };
                rows.push(with_pe);
                owners.push((y / m, x / m));
            }
        }
        for (g, v) in global.iter_mut().zip(&mean) {
            *g += v / features.len() as f64;
        }
        keyed.push(rows);
    }
    let mask: Vec<Vec<bool>> = (0..l * l)
        .map(|q| owners.iter().map(|&(i, j)| i * l + j == q).collect())
        .collect();

    let mut output = Vec::new();
    for (latent, layers) in params.latents.iter().zip(&params.layers) {
        let mut x: Mat = vec![latent.data().to_vec(); l * l];
        for layer in layers {
            let query_in = match &layer.w_aug {
                Some(w_aug) => {
                    let cat: Mat = x.iter().map(|r| r.iter().chain(&global).copied().collect()).collect();
                    mat_mul(&cat, &to_mat(w_aug))
                }
                None => x.clone(),
            };
            let q = mat_mul(&query_in, &to_mat(&layer.w_q));
            let mut keys = Vec::new();
            let mut values = Vec::new();
            for (k, rows) in keyed.iter().enumerate() {
                keys.extend(mat_mul(rows, &to_mat(&layer.w_k[k])));
                values.extend(mat_mul(rows, &to_mat(&layer.w_v[k])));
            }
            let (attended, _) = masked_attention(&q, &keys, &values, &mask, scale);
            x = if cfg.residual {
                x.iter()
                    .zip(&attended)
                    .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p + q).collect())
                    .collect()
            } else {
                attended
            };
        }
        output.extend(x);
    }
    output
}

/// Bilinear sample with half-pixel centers, written per output pixel from
/// the four-weight formula.
pub fn bilinear(grid: &Tensor, th: usize, tw: usize) -> Tensor {
    let (h, w, c) = (grid.shape()[0], grid.shape()[1], grid.shape()[2]);
    let src = |o: usize, input: usize, output: usize| -> (usize, usize, f64) {
        let s = ((o as f64 + 0.5) * input as f64 / output as f64 - 0.5).max(0.0);
        let lo = (s.floor() as usize).min(input - 1);
        let hi = (lo + 1).min(input - 1);
        (lo, hi, if hi == lo { 0.0 } else { s - lo as f64 })
    };
    let mut out = Tensor::zeros(&[th, tw, c]);
    for oy in 0..th {
        let (y0, y1, fy) = src(oy, h, th);
        for ox in 0..tw {
            let (x0, x1, fx) = src(ox, w, tw);
            for ch in 0..c {
                let v = (1.0 - fy) * (1.0 - fx) * grid.get(&[y0, x0, ch])
                    + (1.0 - fy) * fx * grid.get(&[y0, x1, ch])
                    + fy * (1.0 - fx) * grid.get(&[y1, x0, ch])
                    + fy * fx * grid.get(&[y1, x1, ch]);
                out.set(&[oy, ox, ch], v);
            }
        }
    }
    out
}

/// Pearson correlation from the covariance formula
/// `cov(a, b) / sqrt(var(a)·var(b))` with `n − 1` denominators throughout.
pub fn covariance_correlation(cols: &[Vec<f64>]) -> Mat {
    let n = cols[0].len() as f64;
    let mean = |c: &[f64]| c.iter().sum::<f64>() / n;
    let cov = |a: &[f64], b: &[f64]| {
        let (ma, mb) = (mean(a), mean(b));
        a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0)
    };
    cols.iter()
        .enumerate()
        .map(|(i, a)| {
            cols.iter()
                .enumerate()
                .map(|(j, b)| {
                    if i == j {
                        return 1.0;
                    }
                    let d = (cov(a, a) * cov(b, b)).sqrt();
                    if d == 0.0 {
                        0.0
                    } else {
                        cov(a, b) / d
                    }
                })
                .collect()
        })
        .collect()
}

/// Expected spatial answer of `other` relative to `anchor` from the raw
/// box coordinates. `None` when the centers coincide.
pub fn spatial_answer(anchor: &SceneObject, other: &SceneObject) -> Option<&'static str> {
    let acx = anchor.bbox2d.x + 0.5 * anchor.bbox2d.w;
    let acy = anchor.bbox2d.y + 0.5 * anchor.bbox2d.h;
    let ocx = other.bbox2d.x + 0.5 * other.bbox2d.w;
    let ocy = other.bbox2d.y + 0.5 * other.bbox2d.h;
    let horizontal = (ocx - acx).abs();
    let vertical = (ocy - acy).abs();
    if horizontal == 0.0 && vertical == 0.0 {
        None
    } else if horizontal >= vertical {
        Some(if ocx > acx { "right" } else { "left" })
    } else {
        Some(if ocy > acy { "below" } else { "above" })
    }
}

/// Largest-area instance of `category`, the first one on ties.
pub fn largest_instance<'a>(scene: &'a Scene, category: &str) -> &'a SceneObject {
    let mut best: Option<&SceneObject> = None;
    for o in &scene.objects {
        if o.category == category && best.is_none_or(|b| o.bbox2d.w * o.bbox2d.h > b.bbox2d.w * b.bbox2d.h) {
            best = Some(o);
        }
    }
    best.expect("category present")
}

pub fn brute_count(scene: &Scene, category: &str) -> usize {
    let mut n = 0;
    for o in &scene.objects {
        if o.category == category {
            n += 1;
        }
    }
    n
}

fn euclid(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2])).sqrt()
}

/// `(min, max)` over the eight corner distances to `reference`.
fn corner_span(o: &SceneObject, reference: [f64; 3]) -> (f64, f64) {
    let d: Vec<f64> = o.corners3d.expect("3d box").iter().map(|&p| euclid(p, reference)).collect();
    let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn decide(a: (f64, f64), b: (f64, f64), offset: f64) -> Option<usize> {
    if a.1 + offset < b.0 {
        Some(0)
    } else if b.1 + offset < a.0 {
        Some(1)
    } else {
        None
    }
}

/// Categories with exactly one instance that has a 3D box, sorted by name.
pub fn eligible_3d(scene: &Scene) -> Vec<(String, SceneObject)> {
    let mut names: Vec<String> = scene.objects.iter().map(|o| o.category.clone()).collect();
    names.sort();
    names.dedup();
    names
        .into_iter()
        .filter(|n| brute_count(scene, n) == 1)
        .map(|n| {
            let o = scene.objects.iter().find(|o| o.category == n).expect("present").clone();
            (n, o)
        })
        .filter(|(_, o)| o.corners3d.is_some())
        .collect()
}

/// Expected depth items as `(a, b, answer_index)`.
pub fn depth_items(scene: &Scene, offset: f64) -> Vec<(String, String, usize)> {
    let objs = eligible_3d(scene);
    let mut out = Vec::new();
    for i in 0..objs.len() {
        for j in i + 1..objs.len() {
            let sa = corner_span(&objs[i].1, [0.0; 3]);
            let sb = corner_span(&objs[j].1, [0.0; 3]);
            if let Some(ans) = decide(sa, sb, offset) {
                out.push((objs[i].0.clone(), objs[j].0.clone(), ans));
            }
        }
    }
    out
}

/// Expected relative-distance items as `(anchor, a, b, answer_index)`.
pub fn distance_items(scene: &Scene, offset: f64) -> Vec<(String, String, String, usize)> {
    let objs = eligible_3d(scene);
    let mut out = Vec::new();
    let n = objs.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let triple = [&objs[i], &objs[j], &objs[k]];
                for anchor in 0..3 {
                    let corners = triple[anchor].1.corners3d.expect("3d box");
                    let mut centroid = [0.0; 3];
                    for p in corners {
                        for axis in 0..3 {
                            centroid[axis] += p[axis];
                        }
                    }
                    centroid.iter_mut().for_each(|v| *v /= 8.0);
                    let rest: Vec<_> = (0..3).filter(|&p| p != anchor).map(|p| triple[p]).collect();
                    let sa = corner_span(&rest[0].1, centroid);
                    let sb = corner_span(&rest[1].1, centroid);
                    if let Some(ans) = decide(sa, sb, offset) {
                        out.push((triple[anchor].0.clone(), rest[0].0.clone(), rest[1].0.clone(), ans));
                    }
                }
            }
        }
    }
    out
}

/// Difference hash of a raster that is exactly 9 wide and 8 high, built as
/// a bit string by direct pixel comparison.
pub fn dhash_9x8(pixels: &[[f64; 9]; 8]) -> u64 {
    let mut bits = String::with_capacity(64);
    for row in pixels {
        for c in 0..8 {
            bits.push(if row[c] < row[c + 1] { '1' } else { '0' });
        }
    }
    u64::from_str_radix(&bits, 2).expect("64 binary digits")
}

/// Items of one 1-based page, by explicit index arithmetic.
pub fn page_slice<T: Clone>(all: &[T], page: usize, size: usize) -> Vec<T> {
    let mut out = Vec::new();
    let first = (page - 1) * size;
    let mut i = first;
    while i < all.len() && i < first + size {
        out.push(all[i].clone());
        i += 1;
    }
    out
}
