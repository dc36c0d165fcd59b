use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pool::{Category, DataPool};
use super::{CuratorError, Result};

const RATIO_SUM_TOL: f64 = 1e-9;

const DEFAULT_RATIOS: &str = include_str!("../../resources/ratios_default.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuratorConfig {
    /// Per-source cap.
    pub t: usize,
    pub ratios: IndexMap<Category, f64>,
    pub target_size: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Deserialize)]
struct RatioFile {
    ratios: IndexMap<Category, f64>,
}

/// Parses a `{"ratios": {"General": 0.5, ...}}` document. Other keys are
/// ignored.
pub fn parse_ratios(json: &str) -> Result<IndexMap<Category, f64>> {
    let f: RatioFile =
        serde_json::from_str(json).map_err(|e| CuratorError::Config(format!("ratio file: {e}")))?;
    Ok(f.ratios)
}

/// The bundled preset. Approximate: read off a bar chart, not published
/// as numbers.
pub fn default_ratios() -> IndexMap<Category, f64> {
    parse_ratios(DEFAULT_RATIOS).expect("bundled ratios parse")
}

impl CuratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(CuratorError::Config("threshold t must be positive".into()));
        }
        if let Some((c, r)) = self.ratios.iter().find(|(_, r)| !(r.is_finite() && **r >= 0.0)) {
            return Err(CuratorError::Config(format!("ratio for {c} is {r}")));
        }
        let sum: f64 = self.ratios.values().sum();
        if (sum - 1.0).abs() > RATIO_SUM_TOL {
            return Err(CuratorError::Config(format!("ratios sum to {sum}, not 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MixOutcome {
    pub pool: DataPool,
    /// Planned count per category before redistribution.
    pub targets: IndexMap<Category, usize>,
    /// Categories that could not meet their target, with the missing count.
    pub shortfall: IndexMap<Category, usize>,
}

/// `round(ratio·n)` per category; when those do not add up to `n`, falls
/// back to largest-remainder apportionment.
fn apportion(weights: &[(Category, f64)], n: usize) -> Vec<usize> {
    let exact: Vec<f64> = weights.iter().map(|(_, w)| w * n as f64).collect();
    let rounded: Vec<usize> = exact.iter().map(|e| e.round() as usize).collect();
    if rounded.iter().sum::<usize>() == n {
        return rounded;
    }
    let mut out: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut rest = n - out.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..exact.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for i in order.into_iter().cycle() {
        if rest == 0 {
            break;
        }
        out[i] += 1;
        rest -= 1;
    }
    out
}

/// Samples `cfg.target_size` records without replacement following the
/// category ratios. A category that runs out hands its remaining quota to
/// the others in proportion to their ratios; categories with a zero ratio
/// are drawn on only when nothing else is left.
pub fn mix_by_ratio(pool: &DataPool, cfg: &CuratorConfig) -> Result<MixOutcome> {
    cfg.validate()?;
    let n = cfg.target_size;
    if n > pool.len() {
        return Err(CuratorError::Infeasible {
            requested: n,
            available: pool.len(),
        });
    }
    let mut by_cat: IndexMap<Category, Vec<usize>> = Category::ALL.iter().map(|&c| (c, Vec::new())).collect();
    for (i, r) in pool.records.iter().enumerate() {
        by_cat[&r.category].push(i);
    }
    for (c, r) in &cfg.ratios {
        if *r > 0.0 && by_cat[c].is_empty() {
            return Err(CuratorError::MissingCategory(*c));
        }
    }

    let weights: Vec<(Category, f64)> = Category::ALL
        .iter()
        .map(|&c| (c, cfg.ratios.get(&c).copied().unwrap_or(0.0)))
        .collect();
    let planned = apportion(&weights, n);
    let targets: IndexMap<Category, usize> = weights.iter().map(|w| w.0).zip(planned.iter().copied()).collect();

    let avail: Vec<usize> = weights.iter().map(|(c, _)| by_cat[c].len()).collect();
    let mut take: Vec<usize> = planned.iter().zip(&avail).map(|(&p, &a)| p.min(a)).collect();
    let shortfall: IndexMap<Category, usize> = weights
        .iter()
        .zip(planned.iter().zip(&take))
        .filter(|(_, (p, t))| p > t)
        .map(|((c, _), (p, t))| (*c, p - t))
        .collect();
    let mut missing: usize = shortfall.values().sum();
    while missing > 0 {
        let spare: Vec<usize> = (0..weights.len()).filter(|&i| take[i] < avail[i]).collect();
        let weighted: Vec<usize> = spare.iter().copied().filter(|&i| weights[i].1 > 0.0).collect();
        let (pick, w): (Vec<usize>, Vec<f64>) = if weighted.is_empty() {
            spare.iter().map(|&i| (i, (avail[i] - take[i]) as f64)).unzip()
        } else {
            weighted.iter().map(|&i| (i, weights[i].1)).unzip()
        };
        let total: f64 = w.iter().sum();
        let sub: Vec<(Category, f64)> = pick.iter().zip(&w).map(|(&i, &x)| (weights[i].0, x / total)).collect();
        let extra = apportion(&sub, missing);
        for (&i, e) in pick.iter().zip(extra) {
            let got = e.min(avail[i] - take[i]);
            take[i] += got;
            missing -= got;
        }
    }
    if !shortfall.is_empty() {
        log::warn!("mix shortfall redistributed: {shortfall:?}");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut chosen = Vec::with_capacity(n);
    for ((c, _), k) in weights.iter().zip(take) {
        let mut idx = by_cat[c].clone();
        idx.shuffle(&mut rng);
        chosen.extend_from_slice(&idx[..k]);
    }
    chosen.sort_unstable();
    Ok(MixOutcome {
        pool: DataPool::new(chosen.into_iter().map(|i| pool.records[i].clone()).collect()),
        targets,
        shortfall,
    })
}
