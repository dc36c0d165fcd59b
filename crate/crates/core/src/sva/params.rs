use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::numcore::{Tape, Tensor, Var};

use super::config::SvaConfig;
use super::error::{Result, SvaError};

const INIT_STD: f64 = 0.02;

/// Projections for one cross-attention layer. Row-vector convention: a query
/// row `x` projects as `x · w_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// `[C, C]`
    pub w_q: Tensor,
    /// One `[C, C]` per encoder.
    pub w_k: Vec<Tensor>,
    /// One `[C, C]` per encoder.
    pub w_v: Vec<Tensor>,
    /// `[2C, C]`, present iff global query augmentation is on.
    pub w_aug: Option<Tensor>,
}

/// All connector parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SvaParams {
    /// Learnable latent token per group, `[C]`.
    pub latents: Vec<Tensor>,
    /// `layers[g][d]`
    pub layers: Vec<Vec<LayerParams>>,
    /// `[m_k, m_k, C]` per encoder when positional encodings are on and `m_k > 1`.
    pub positional: Vec<Option<Tensor>>,
}

impl LayerParams {
    pub fn identity(cfg: &SvaConfig) -> Self {
        let c = cfg.channels;
        let n = cfg.num_encoders();
        Self {
            w_q: Tensor::eye(c),
            w_k: vec![Tensor::eye(c); n],
            w_v: vec![Tensor::eye(c); n],
            w_aug: cfg
                .global_query_augmentation
                .then(|| Tensor::from_fn(&[2 * c, c], |i| if i / c == i % c { 1.0 } else { 0.0 })),
        }
    }

    pub fn init(cfg: &SvaConfig, rng: &mut ChaCha8Rng) -> Self {
        let c = cfg.channels;
        let n = cfg.num_encoders();
        Self {
            w_q: orthogonal(c, c, rng),
            w_k: (0..n).map(|_| orthogonal(c, c, rng)).collect(),
            w_v: (0..n).map(|_| orthogonal(c, c, rng)).collect(),
            w_aug: cfg
                .global_query_augmentation
                .then(|| orthogonal(2 * c, c, rng)),
        }
    }

    pub fn validate(&self, cfg: &SvaConfig, prefix: &str) -> Result<()> {
        let c = cfg.channels;
        check_shape(&format!("{prefix}.w_q"), &self.w_q, &[c, c])?;
        if self.w_k.len() != cfg.num_encoders() || self.w_v.len() != cfg.num_encoders() {
            return Err(SvaError::Param {
                name: prefix.to_string(),
                reason: format!(
                    "{} key / {} value projections for {} encoders",
                    self.w_k.len(),
                    self.w_v.len(),
                    cfg.num_encoders()
                ),
            });
        }
        for (k, (wk, wv)) in self.w_k.iter().zip(&self.w_v).enumerate() {
            check_shape(&format!("{prefix}.w_k.{k}"), wk, &[c, c])?;
            check_shape(&format!("{prefix}.w_v.{k}"), wv, &[c, c])?;
        }
        match (&self.w_aug, cfg.global_query_augmentation) {
            (Some(w), true) => check_shape(&format!("{prefix}.w_aug"), w, &[2 * c, c]),
            (None, false) => Ok(()),
            (Some(_), false) => Err(SvaError::Param {
                name: format!("{prefix}.w_aug"),
                reason: "present but augmentation is disabled".into(),
            }),
            (None, true) => Err(SvaError::Param {
                name: format!("{prefix}.w_aug"),
                reason: "missing while augmentation is enabled".into(),
            }),
        }
    }

    pub(crate) fn bind(&self, tape: &mut Tape, prefix: &str, trainable: bool) -> BoundLayer {
        let mut put = |name: String, t: &Tensor| {
            if trainable {
                tape.param(name, t.clone()).1
            } else {
                tape.constant(t.clone())
            }
        };
        BoundLayer {
            w_q: put(format!("{prefix}.w_q"), &self.w_q),
            w_k: self
                .w_k
                .iter()
                .enumerate()
                .map(|(k, t)| put(format!("{prefix}.w_k.{k}"), t))
                .collect(),
            w_v: self
                .w_v
                .iter()
                .enumerate()
                .map(|(k, t)| put(format!("{prefix}.w_v.{k}"), t))
                .collect(),
            w_aug: self
                .w_aug
                .as_ref()
                .map(|t| put(format!("{prefix}.w_aug"), t)),
        }
    }

    /// Flattened `(name, tensor)` list in the same order `bind` registers them.
    pub(crate) fn named(&self, prefix: &str) -> Vec<(String, Tensor)> {
        let mut out = vec![(format!("{prefix}.w_q"), self.w_q.clone())];
        out.extend(
            self.w_k
                .iter()
                .enumerate()
                .map(|(k, t)| (format!("{prefix}.w_k.{k}"), t.clone())),
        );
        out.extend(
            self.w_v
                .iter()
                .enumerate()
                .map(|(k, t)| (format!("{prefix}.w_v.{k}"), t.clone())),
        );
        if let Some(t) = &self.w_aug {
            out.push((format!("{prefix}.w_aug"), t.clone()));
        }
        out
    }

    fn rebuild_named(&self, prefix: &str, lookup: &dyn Fn(&str) -> Tensor) -> Self {
        Self {
            w_q: lookup(&format!("{prefix}.w_q")),
            w_k: (0..self.w_k.len())
                .map(|k| lookup(&format!("{prefix}.w_k.{k}")))
                .collect(),
            w_v: (0..self.w_v.len())
                .map(|k| lookup(&format!("{prefix}.w_v.{k}")))
                .collect(),
            w_aug: self.w_aug.as_ref().map(|_| lookup(&format!("{prefix}.w_aug"))),
        }
    }
}

impl SvaParams {
    /// Seeded initialization: latents and positional encodings from
    /// `N(0, 0.02²)`, projections orthogonal.
    pub fn init(cfg: &SvaConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, INIT_STD).expect("valid std");
        let c = cfg.channels;
        let latents = (0..cfg.groups)
            .map(|_| Tensor::from_fn(&[c], |_| normal.sample(&mut rng)))
            .collect();
        let layers = (0..cfg.groups)
            .map(|_| (0..cfg.depth).map(|_| LayerParams::init(cfg, &mut rng)).collect())
            .collect();
        let positional = positional_slots(cfg)
            .map(|m| m.map(|m| Tensor::from_fn(&[m, m, c], |_| normal.sample(&mut rng))))
            .collect();
        Ok(Self {
            latents,
            layers,
            positional,
        })
    }

    /// Identity projections, given latents, zero positional encodings.
    pub fn identity(cfg: &SvaConfig, latents: Vec<Tensor>) -> Result<Self> {
        cfg.validate()?;
        let layers = (0..cfg.groups)
            .map(|_| (0..cfg.depth).map(|_| LayerParams::identity(cfg)).collect())
            .collect();
        let positional = positional_slots(cfg)
            .map(|m| m.map(|m| Tensor::zeros(&[m, m, cfg.channels])))
            .collect();
        let out = Self {
            latents,
            layers,
            positional,
        };
        out.validate(cfg)?;
        Ok(out)
    }

    pub fn validate(&self, cfg: &SvaConfig) -> Result<()> {
        cfg.validate()?;
        let c = cfg.channels;
        if self.latents.len() != cfg.groups || self.layers.len() != cfg.groups {
            return Err(SvaError::Param {
                name: "latents/layers".into(),
                reason: format!(
                    "{} latents and {} layer groups for {} groups",
                    self.latents.len(),
                    self.layers.len(),
                    cfg.groups
                ),
            });
        }
        for (g, latent) in self.latents.iter().enumerate() {
            if latent.len() != c {
                return Err(SvaError::Param {
                    name: format!("g{g}.latent"),
                    reason: format!("shape {:?}, expected [{c}]", latent.shape()),
                });
            }
        }
        for (g, group) in self.layers.iter().enumerate() {
            if group.len() != cfg.depth {
                return Err(SvaError::Param {
                    name: format!("g{g}"),
                    reason: format!("{} layers, expected depth {}", group.len(), cfg.depth),
                });
            }
            for (d, layer) in group.iter().enumerate() {
                layer.validate(cfg, &format!("g{g}.l{d}"))?;
            }
        }
        validate_positional(&self.positional, cfg)
    }

    /// Records every tensor on the tape, as parameters when `trainable`.
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> BoundParams {
        let latents = self
            .latents
            .iter()
            .enumerate()
            .map(|(g, t)| {
                let row = t.reshape(&[1, t.len()]).expect("latent is a vector");
                if trainable {
                    tape.param(format!("g{g}.latent"), row).1
                } else {
                    tape.constant(row)
                }
            })
            .collect();
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(g, group)| {
                group
                    .iter()
                    .enumerate()
                    .map(|(d, l)| l.bind(tape, &format!("g{g}.l{d}"), trainable))
                    .collect()
            })
            .collect();
        let positional = bind_positional(&self.positional, tape, trainable);
        BoundParams {
            latents,
            layers,
            positional,
        }
    }

    /// Handles for tensors already on the tape, given in `named_tensors` order.
    pub fn bind_vars(&self, vars: &[Var]) -> BoundParams {
        let mut it = vars.iter().copied();
        let mut next = || it.next().expect("one var per named tensor");
        let latents = self.latents.iter().map(|_| next()).collect();
        let layers = self
            .layers
            .iter()
            .map(|group| {
                group
                    .iter()
                    .map(|l| BoundLayer {
                        w_q: next(),
                        w_k: l.w_k.iter().map(|_| next()).collect(),
                        w_v: l.w_v.iter().map(|_| next()).collect(),
                        w_aug: l.w_aug.as_ref().map(|_| next()),
                    })
                    .collect()
            })
            .collect();
        let positional = self.positional.iter().map(|p| p.as_ref().map(|_| next())).collect();
        BoundParams {
            latents,
            layers,
            positional,
        }
    }

    /// Every tensor with a stable name, in the registration order of `bind`.
    pub fn named_tensors(&self) -> Vec<(String, Tensor)> {
        let mut out: Vec<(String, Tensor)> = self
            .latents
            .iter()
            .enumerate()
            .map(|(g, t)| (format!("g{g}.latent"), t.reshape(&[1, t.len()]).expect("vector")))
            .collect();
        for (g, group) in self.layers.iter().enumerate() {
            for (d, l) in group.iter().enumerate() {
                out.extend(l.named(&format!("g{g}.l{d}")));
            }
        }
        for (k, p) in self.positional.iter().enumerate() {
            if let Some(p) = p {
                out.push((format!("pos.{k}"), p.clone()));
            }
        }
        out
    }

    /// Rebuilds parameters from a `named_tensors`-ordered list of values.
    pub fn with_named_values(&self, values: &[Tensor]) -> Self {
        let names = self.named_tensors();
        assert_eq!(names.len(), values.len(), "value count mismatch");
        let lookup = |name: &str| -> Tensor {
            let i = names
                .iter()
                .position(|(n, _)| n == name)
                .unwrap_or_else(|| panic!("unknown parameter {name}"));
            values[i].clone()
        };
        Self {
            latents: self
                .latents
                .iter()
                .enumerate()
                .map(|(g, t)| lookup(&format!("g{g}.latent")).reshape(t.shape()).expect("same size"))
                .collect(),
            layers: self
                .layers
                .iter()
                .enumerate()
                .map(|(g, group)| {
                    group
                        .iter()
                        .enumerate()
                        .map(|(d, l)| l.rebuild_named(&format!("g{g}.l{d}"), &lookup))
                        .collect()
                })
                .collect(),
            positional: self
                .positional
                .iter()
                .enumerate()
                .map(|(k, p)| p.as_ref().map(|_| lookup(&format!("pos.{k}"))))
                .collect(),
        }
    }
}

/// Tape handles for one layer.
#[derive(Debug, Clone)]
pub struct BoundLayer {
    pub w_q: Var,
    pub w_k: Vec<Var>,
    pub w_v: Vec<Var>,
    pub w_aug: Option<Var>,
}

/// Tape handles for all connector parameters.
#[derive(Debug, Clone)]
pub struct BoundParams {
    /// `[1, C]` per group.
    pub latents: Vec<Var>,
    pub layers: Vec<Vec<BoundLayer>>,
    pub positional: Vec<Option<Var>>,
}

fn positional_slots(cfg: &SvaConfig) -> impl Iterator<Item = Option<usize>> + '_ {
    cfg.multipliers
        .iter()
        .map(move |&m| (cfg.positional_encoding && m > 1).then_some(m))
}

pub(crate) fn validate_positional(positional: &[Option<Tensor>], cfg: &SvaConfig) -> Result<()> {
    if positional.len() != cfg.num_encoders() {
        return Err(SvaError::Param {
            name: "pos".into(),
            reason: format!(
                "{} positional slots for {} encoders",
                positional.len(),
                cfg.num_encoders()
            ),
        });
    }
    for (k, (slot, m)) in positional.iter().zip(positional_slots(cfg)).enumerate() {
        match (slot, m) {
            (Some(p), Some(m)) => check_shape(&format!("pos.{k}"), p, &[m, m, cfg.channels])?,
            (None, None) => {}
            (Some(_), None) => {
                return Err(SvaError::Param {
                    name: format!("pos.{k}"),
                    reason: "only encoders with m_k > 1 carry positional encodings".into(),
                })
            }
            (None, Some(_)) => {
                return Err(SvaError::Param {
                    name: format!("pos.{k}"),
                    reason: "missing positional encoding".into(),
                })
            }
        }
    }
    Ok(())
}

pub(crate) fn bind_positional(
    positional: &[Option<Tensor>],
    tape: &mut Tape,
    trainable: bool,
) -> Vec<Option<Var>> {
    positional
        .iter()
        .enumerate()
        .map(|(k, p)| {
            p.as_ref().map(|t| {
                if trainable {
                    tape.param(format!("pos.{k}"), t.clone()).1
                } else {
                    tape.constant(t.clone())
                }
            })
        })
        .collect()
}

fn check_shape(name: &str, t: &Tensor, expected: &[usize]) -> Result<()> {
    if t.shape() != expected {
        return Err(SvaError::Param {
            name: name.to_string(),
            reason: format!("shape {:?}, expected {expected:?}", t.shape()),
        });
    }
    Ok(())
}

/// `rows × cols` matrix with orthonormal columns (or rows, if wide).
fn orthogonal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let tall = rows >= cols;
    let (r, c) = if tall { (rows, cols) } else { (cols, rows) };
    let a = DMatrix::<f64>::from_fn(r, c, |_, _| StandardNormal.sample(rng));
    let qr = a.qr();
    let mut q = qr.q();
    let rdiag = qr.r().diagonal();
    for j in 0..c {
        if rdiag[j] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let q = if tall { q } else { q.transpose() };
    Tensor::from_fn(&[rows, cols], |i| q[(i / cols, i % cols)])
}
