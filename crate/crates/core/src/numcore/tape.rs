//! Recorded-operation tape for reverse-mode differentiation.
//!
//! Every op evaluates eagerly and appends a node; `backward` walks the nodes
//! in reverse. Ops view their inputs as `[rows, last_dim]` matrices unless
//! stated otherwise.

use std::sync::Arc;

use super::error::{NumError, Result};
use super::ops::{self, axis_taps, softmax_in_place};
use super::tensor::Tensor;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Index of a registered parameter, in registration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub usize);

/// Which key rows each query row may attend to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttentionPattern {
    keys: Vec<Vec<usize>>,
}

impl AttentionPattern {
    pub fn new(keys: Vec<Vec<usize>>) -> Result<Self> {
        if keys.iter().any(Vec::is_empty) {
            return Err(NumError::Invalid(
                "every query needs at least one key".into(),
            ));
        }
        Ok(Self { keys })
    }

    /// Every query sees all `num_keys` keys.
    pub fn global(num_queries: usize, num_keys: usize) -> Result<Self> {
        Self::new(vec![(0..num_keys).collect(); num_queries])
    }

    pub fn num_queries(&self) -> usize {
        self.keys.len()
    }

    pub fn keys_for(&self, query: usize) -> &[usize] {
        &self.keys[query]
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    Add(usize, usize),
    AddRow(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    Sum(usize),
    Softmax(usize),
    Relu(usize),
    Reshape(usize),
    Transpose(usize),
    GatherRows(usize, Arc<[usize]>),
    ConcatRows(Vec<usize>),
    ConcatCols(Vec<usize>),
    MeanRows(usize),
    RepeatRows(usize),
    Resize(usize),
    Attention {
        q: usize,
        k: usize,
        v: usize,
        pattern: Arc<AttentionPattern>,
        scale: f64,
        weights: Vec<Vec<f64>>,
        logits: Vec<Vec<f64>>,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Gradients for every registered parameter after a backward pass.
#[derive(Debug, Clone)]
pub struct Gradients {
    entries: Vec<(String, Tensor)>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].1
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor)> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, (n, t))| (ParamId(i), n.as_str(), t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: Vec<(String, usize)>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records a non-differentiated input.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf)
    }

    /// Records a trainable input; its gradient is reported by `backward`.
    pub fn param(&mut self, name: impl Into<String>, t: Tensor) -> (ParamId, Var) {
        let v = self.push(t, Op::Leaf);
        self.params.push((name.into(), v.0));
        (ParamId(self.params.len() - 1), v)
    }

    pub fn param_names(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|(n, _)| n.as_str())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = ops::matmul(self.value(a), self.value(b))?;
        Ok(self.push(out, Op::MatMul(a.0, b.0)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).add(self.value(b))?;
        Ok(self.push(out, Op::Add(a.0, b.0)))
    }

    /// Adds a length-`c` vector to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (av, rv) = (self.value(a), self.value(row));
        if rv.len() != av.last_dim() {
            return Err(NumError::Dimension {
                op: "add_row",
                left: av.shape().to_vec(),
                right: rv.shape().to_vec(),
            });
        }
        let c = av.last_dim();
        let mut out = av.clone();
        for (i, x) in out.data_mut().iter_mut().enumerate() {
            *x += rv.data()[i % c];
        }
        Ok(self.push(out, Op::AddRow(a.0, row.0)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).zip_map(self.value(b), "mul", |x, y| x * y)?;
        Ok(self.push(out, Op::Mul(a.0, b.0)))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let out = self.value(a).scale(s);
        self.push(out, Op::Scale(a.0, s))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let out = Tensor::scalar(self.value(a).sum());
        self.push(out, Op::Sum(a.0))
    }

    pub fn softmax_last(&mut self, a: Var) -> Result<Var> {
        let out = ops::softmax_last(self.value(a))?;
        Ok(self.push(out, Op::Softmax(a.0)))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.max(0.0));
        self.push(out, Op::Relu(a.0))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let out = self.value(a).reshape(shape)?;
        Ok(self.push(out, Op::Reshape(a.0)))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).transpose()?;
        Ok(self.push(out, Op::Transpose(a.0)))
    }

    /// Selects rows of `a` (viewed as `[rows, c]`) into an `[indices.len(), c]` matrix.
    pub fn gather_rows(&mut self, a: Var, indices: Arc<[usize]>) -> Result<Var> {
        let av = self.value(a);
        let (rows, c) = (av.rows(), av.last_dim());
        if let Some(&bad) = indices.iter().find(|&&i| i >= rows) {
            return Err(NumError::Invalid(format!(
                "gather_rows index {bad} out of range for {rows} rows"
            )));
        }
        let mut data = Vec::with_capacity(indices.len() * c);
        for &i in indices.iter() {
            data.extend_from_slice(av.row(i));
        }
        let out = Tensor::new(vec![indices.len(), c], data)?;
        Ok(self.push(out, Op::GatherRows(a.0, indices)))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let vals: Vec<&Tensor> = parts.iter().map(|&p| self.value(p)).collect();
        let out = Tensor::concat_rows(&vals)?;
        Ok(self.push(out, Op::ConcatRows(parts.iter().map(|p| p.0).collect())))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let vals: Vec<&Tensor> = parts.iter().map(|&p| self.value(p)).collect();
        let out = Tensor::concat_cols(&vals)?;
        Ok(self.push(out, Op::ConcatCols(parts.iter().map(|p| p.0).collect())))
    }

    /// Mean over rows: `[rows, c] -> [1, c]`.
    pub fn mean_rows(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        let (rows, c) = (av.rows(), av.last_dim());
        let mut out = vec![0.0; c];
        for r in 0..rows {
            for (o, x) in out.iter_mut().zip(av.row(r)) {
                *o += x;
            }
        }
        out.iter_mut().for_each(|x| *x /= rows as f64);
        let out = Tensor::new(vec![1, c], out)?;
        Ok(self.push(out, Op::MeanRows(a.0)))
    }

    /// Tiles a single row `n` times: `[1, c]` or `[c]` -> `[n, c]`.
    pub fn repeat_rows(&mut self, a: Var, n: usize) -> Result<Var> {
        let av = self.value(a);
        if av.rows() != 1 || n == 0 {
            return Err(NumError::Shape {
                shape: av.shape().to_vec(),
                reason: format!("repeat_rows needs a single row and n > 0 (n = {n})"),
            });
        }
        let c = av.last_dim();
        let data = av.data().repeat(n);
        let out = Tensor::new(vec![n, c], data)?;
        Ok(self.push(out, Op::RepeatRows(a.0)))
    }

    pub fn bilinear_resize(&mut self, a: Var, target_h: usize, target_w: usize) -> Result<Var> {
        let out = ops::bilinear_resize(self.value(a), target_h, target_w)?;
        Ok(self.push(out, Op::Resize(a.0)))
    }

    /// Scaled dot-product attention where query row `r` sees only the key
    /// rows listed by `pattern.keys_for(r)`.
    pub fn attention(
        &mut self,
        q: Var,
        k: Var,
        v: Var,
        pattern: Arc<AttentionPattern>,
        scale: f64,
    ) -> Result<Var> {
        let (qv, kv, vv) = (self.value(q), self.value(k), self.value(v));
        let c = qv.last_dim();
        if qv.rows() != pattern.num_queries() || kv.last_dim() != c || kv.rows() != vv.rows() {
            return Err(NumError::Dimension {
                op: "attention",
                left: qv.shape().to_vec(),
                right: kv.shape().to_vec(),
            });
        }
        let cv = vv.last_dim();
        let mut out = vec![0.0; qv.rows() * cv];
        let mut weights = Vec::with_capacity(qv.rows());
        let mut logits = Vec::with_capacity(qv.rows());
        for r in 0..qv.rows() {
            let keys = pattern.keys_for(r);
            if let Some(&bad) = keys.iter().find(|&&j| j >= kv.rows()) {
                return Err(NumError::Invalid(format!(
                    "attention key {bad} out of range for {} keys",
                    kv.rows()
                )));
            }
            let qr = qv.row(r);
            let l: Vec<f64> = keys
                .iter()
                .map(|&j| dot(qr, kv.row(j)) * scale)
                .collect();
            let mut w = l.clone();
            softmax_in_place(&mut w);
            let orow = &mut out[r * cv..(r + 1) * cv];
            for (&j, &wj) in keys.iter().zip(&w) {
                for (o, x) in orow.iter_mut().zip(vv.row(j)) {
                    *o += wj * x;
                }
            }
            weights.push(w);
            logits.push(l);
        }
        let out = Tensor::new(vec![qv.rows(), cv], out)?;
        Ok(self.push(
            out,
            Op::Attention {
                q: q.0,
                k: k.0,
                v: v.0,
                pattern,
                scale,
                weights,
                logits,
            },
        ))
    }

    /// Softmax weights recorded by an attention node, one vector per query.
    pub fn attention_weights(&self, v: Var) -> Option<&[Vec<f64>]> {
        match &self.nodes[v.0].op {
            Op::Attention { weights, .. } => Some(weights),
            _ => None,
        }
    }

    /// Pre-softmax logits recorded by an attention node.
    pub fn attention_logits(&self, v: Var) -> Option<&[Vec<f64>]> {
        match &self.nodes[v.0].op {
            Op::Attention { logits, .. } => Some(logits),
            _ => None,
        }
    }

    /// Reverse pass from a scalar output.
    pub fn backward(&self, output: Var) -> Result<Gradients> {
        let out_shape = self.value(output).shape();
        if self.value(output).len() != 1 {
            return Err(NumError::NotScalar(out_shape.to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; output.0 + 1];
        grads[output.0] = Some(Tensor::full(out_shape, 1.0));

        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            // Leaves keep their gradient so parameters can read it afterwards.
            if matches!(node.op, Op::Leaf) {
                grads[idx] = Some(g);
                continue;
            }
            for (input, contrib) in self.local_grads(node, &g)? {
                accumulate(&mut grads[input], contrib)?;
            }
        }

        let entries = self
            .params
            .iter()
            .map(|(name, idx)| {
                let g = grads
                    .get(*idx)
                    .and_then(|g| g.clone())
                    .unwrap_or_else(|| Tensor::zeros(self.nodes[*idx].value.shape()));
                (name.clone(), g)
            })
            .collect();
        Ok(Gradients { entries })
    }

    fn local_grads(&self, node: &Node, g: &Tensor) -> Result<Vec<(usize, Tensor)>> {
        let val = |i: usize| &self.nodes[i].value;
        Ok(match &node.op {
            Op::Leaf => Vec::new(),
            Op::MatMul(a, b) => {
                let ga = ops::matmul(g, &val(*b).transpose()?)?;
                let gb = ops::matmul(&val(*a).transpose()?, g)?;
                vec![(*a, ga), (*b, gb)]
            }
            Op::Add(a, b) => vec![(*a, g.clone()), (*b, g.clone())],
            Op::AddRow(a, r) => {
                let c = g.last_dim();
                let mut gr = vec![0.0; c];
                for (i, x) in g.data().iter().enumerate() {
                    gr[i % c] += x;
                }
                let gr = Tensor::new(val(*r).shape().to_vec(), gr)?;
                vec![(*a, g.clone()), (*r, gr)]
            }
            Op::Mul(a, b) => {
                let ga = g.zip_map(val(*b), "mul", |x, y| x * y)?;
                let gb = g.zip_map(val(*a), "mul", |x, y| x * y)?;
                vec![(*a, ga), (*b, gb)]
            }
            Op::Scale(a, s) => vec![(*a, g.scale(*s))],
            Op::Sum(a) => {
                let gv = g.data()[0];
                vec![(*a, Tensor::full(val(*a).shape(), gv))]
            }
            Op::Softmax(a) => {
                let y = &node.value;
                let n = y.last_dim();
                let mut ga = vec![0.0; y.len()];
                for ((gr, yr), out) in g
                    .data()
                    .chunks(n)
                    .zip(y.data().chunks(n))
                    .zip(ga.chunks_mut(n))
                {
                    let inner: f64 = gr.iter().zip(yr).map(|(a, b)| a * b).sum();
                    for ((o, &gi), &yi) in out.iter_mut().zip(gr).zip(yr) {
                        *o = yi * (gi - inner);
                    }
                }
                vec![(*a, Tensor::new(y.shape().to_vec(), ga)?)]
            }
            Op::Relu(a) => {
                let ga = g.zip_map(val(*a), "relu", |gi, x| if x > 0.0 { gi } else { 0.0 })?;
                vec![(*a, ga)]
            }
            Op::Reshape(a) => vec![(*a, g.reshape(val(*a).shape())?)],
            Op::Transpose(a) => vec![(*a, g.transpose()?)],
            Op::GatherRows(a, indices) => {
                let src = val(*a);
                let c = src.last_dim();
                let mut ga = Tensor::zeros(src.shape());
                for (r, &i) in indices.iter().enumerate() {
                    let dst = &mut ga.data_mut()[i * c..(i + 1) * c];
                    for (d, x) in dst.iter_mut().zip(g.row(r)) {
                        *d += x;
                    }
                }
                vec![(*a, ga)]
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                let mut out = Vec::with_capacity(parts.len());
                for &p in parts {
                    let n = val(p).len();
                    let piece = g.data()[offset..offset + n].to_vec();
                    out.push((p, Tensor::new(val(p).shape().to_vec(), piece)?));
                    offset += n;
                }
                out
            }
            Op::ConcatCols(parts) => {
                let rows = g.rows();
                let mut pieces: Vec<Vec<f64>> =
                    parts.iter().map(|&p| Vec::with_capacity(val(p).len())).collect();
                for r in 0..rows {
                    let mut col = 0;
                    let grow = g.row(r);
                    for (piece, &p) in pieces.iter_mut().zip(parts) {
                        let w = val(p).last_dim();
                        piece.extend_from_slice(&grow[col..col + w]);
                        col += w;
                    }
                }
                parts
                    .iter()
                    .zip(pieces)
                    .map(|(&p, d)| Ok((p, Tensor::new(val(p).shape().to_vec(), d)?)))
                    .collect::<Result<_>>()?
            }
            Op::MeanRows(a) => {
                let src = val(*a);
                let rows = src.rows() as f64;
                let c = src.last_dim();
                let ga = Tensor::from_fn(src.shape(), |i| g.data()[i % c] / rows);
                vec![(*a, ga)]
            }
            Op::RepeatRows(a) => {
                let src = val(*a);
                let c = src.last_dim();
                let mut ga = vec![0.0; c];
                for (i, x) in g.data().iter().enumerate() {
                    ga[i % c] += x;
                }
                vec![(*a, Tensor::new(src.shape().to_vec(), ga)?)]
            }
            Op::Resize(a) => vec![(*a, resize_backward(val(*a), g))],
            Op::Attention {
                q,
                k,
                v,
                pattern,
                scale,
                weights,
                ..
            } => {
                let (qv, kv, vv) = (val(*q), val(*k), val(*v));
                let mut gq = Tensor::zeros(qv.shape());
                let mut gk = Tensor::zeros(kv.shape());
                let mut gv = Tensor::zeros(vv.shape());
                let (c, cv) = (qv.last_dim(), vv.last_dim());
                for (r, w) in weights.iter().enumerate() {
                    let keys = pattern.keys_for(r);
                    let go = g.row(r);
                    let dw: Vec<f64> = keys.iter().map(|&j| dot(go, vv.row(j))).collect();
                    let inner: f64 = dw.iter().zip(w).map(|(a, b)| a * b).sum();
                    let qr = qv.row(r).to_vec();
                    for ((&j, &wj), &dwj) in keys.iter().zip(w).zip(&dw) {
                        let gvrow = &mut gv.data_mut()[j * cv..(j + 1) * cv];
                        for (d, x) in gvrow.iter_mut().zip(go) {
                            *d += wj * x;
                        }
                        let dlogit = wj * (dwj - inner) * scale;
                        let krow = kv.row(j).to_vec();
                        let gqrow = &mut gq.data_mut()[r * c..(r + 1) * c];
                        for (d, x) in gqrow.iter_mut().zip(&krow) {
                            *d += dlogit * x;
                        }
                        let gkrow = &mut gk.data_mut()[j * c..(j + 1) * c];
                        for (d, x) in gkrow.iter_mut().zip(&qr) {
                            *d += dlogit * x;
                        }
                    }
                }
                vec![(*q, gq), (*k, gk), (*v, gv)]
            }
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn accumulate(slot: &mut Option<Tensor>, contrib: Tensor) -> Result<()> {
    match slot {
        Some(existing) => *existing = existing.add(&contrib)?,
        None => *slot = Some(contrib),
    }
    Ok(())
}

/// Adjoint of bilinear resize: scatter each output gradient onto its four taps.
fn resize_backward(input: &Tensor, g: &Tensor) -> Tensor {
    let (h, w, c) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (th, tw) = (g.shape()[0], g.shape()[1]);
    let rows = axis_taps(h, th);
    let cols = axis_taps(w, tw);
    let mut out = Tensor::zeros(input.shape());
    let data = out.data_mut();
    for (oy, ty) in rows.iter().enumerate() {
        for (ox, tx) in cols.iter().enumerate() {
            let src = &g.data()[(oy * tw + ox) * c..(oy * tw + ox + 1) * c];
            let corners = [
                (ty.lo, tx.lo, (1.0 - ty.frac) * (1.0 - tx.frac)),
                (ty.lo, tx.hi, (1.0 - ty.frac) * tx.frac),
                (ty.hi, tx.lo, ty.frac * (1.0 - tx.frac)),
                (ty.hi, tx.hi, ty.frac * tx.frac),
            ];
            for (y, x, wgt) in corners {
                if wgt == 0.0 {
                    continue;
                }
                let dst = &mut data[(y * w + x) * c..(y * w + x + 1) * c];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += wgt * s;
                }
            }
        }
    }
    out
}
