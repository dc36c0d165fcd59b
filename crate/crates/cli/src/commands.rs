//! Implementations behind the `forge` subcommands. Each returns the
//! records it would print so tests can call them directly.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use forge_core::baselines::{concat_ensemble, resampler, Projector, ResamplerParams};
use forge_core::curator::engine::{run_engine, ChatClient, EngineClients, EngineConfig, EngineReport, Journal};
use forge_core::curator::{
    apply_threshold, default_ratios, dhash_file, leakage_scan, mix_by_ratio, parse_ratios, CuratorConfig, DataPool,
    LeakageReport, MatchMode, MixOutcome, NamedHashes,
};
use forge_core::cvbench::{generate_all, score_cvbench, CvBenchScore, GenConfig, GradedItem, QuestionItem, Scene};
use forge_core::eval::{
    default_overrides, grade_all, pca_cluster, random_baseline, vision_gap_report, ClusterReport, GapEntry,
    GradedResponse, Response, ScoreTable,
};
use forge_core::jsonl;
use forge_core::numcore::{read_tensor_file, Tensor};
use forge_core::sva::{random_features, sva_bench, sva_forward, CheckRecord, EncoderFeatureMap, SvaConfig, SvaParams};

use crate::mock::MockClients;

/// Config file for `sva bench` and `connector compare`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvaRunConfig {
    pub sva: SvaConfig,
    /// Parameter initialization seed.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// One tensor text file per encoder; random features when absent.
    #[serde(default)]
    pub features: Vec<PathBuf>,
    #[serde(default = "one")]
    pub feature_seed: u64,
}

fn default_eps() -> f64 {
    1e-5
}

fn one() -> u64 {
    1
}

fn load_run(path: &Path) -> Result<(SvaRunConfig, Vec<EncoderFeatureMap>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg: SvaRunConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    cfg.sva.validate()?;
    let features = if cfg.features.is_empty() {
        random_features(&cfg.sva, cfg.feature_seed)
    } else {
        if cfg.features.len() != cfg.sva.num_encoders() {
            bail!("{} feature files for {} encoders", cfg.features.len(), cfg.sva.num_encoders());
        }
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.features
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let grid = read_tensor_file(base.join(p))?;
                let f = EncoderFeatureMap::new(k, cfg.sva.multipliers[k], grid);
                f.check(&cfg.sva, k)?;
                Ok(f)
            })
            .collect::<Result<_>>()?
    };
    Ok((cfg, features))
}

pub fn sva_bench_cmd(config: &Path) -> Result<Vec<CheckRecord>> {
    let (run, features) = load_run(config)?;
    let params = SvaParams::init(&run.sva, run.seed)?;
    Ok(sva_bench(&features, &params, &run.sva, run.eps)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConnectorRecord {
    pub connector: String,
    pub tokens: usize,
    pub channels: usize,
    pub seconds: f64,
}

/// Token counts and wall time of the aggregator and both baselines on the
/// same features.
pub fn connector_compare(config: &Path) -> Result<Vec<ConnectorRecord>> {
    let (run, features) = load_run(config)?;
    let cfg = &run.sva;
    let c = cfg.channels;
    let params = SvaParams::init(cfg, run.seed)?;
    let t = Instant::now();
    let sva = sva_forward(&features, &params, cfg)?;
    let sva_s = t.elapsed().as_secs_f64();

    let maps: Vec<Tensor> = features
        .iter()
        .map(|f| f.grid.reshape(&[f.side() * f.side(), c]))
        .collect::<std::result::Result<_, _>>()?;
    let n = cfg.num_encoders();
    // Averages the encoders' channels back to C.
    let weight = Tensor::from_fn(&[n * c, c], |i| if i / c % c == i % c { 1.0 / n as f64 } else { 0.0 });
    let t = Instant::now();
    let ens = concat_ensemble(&maps, cfg.tokens_per_group(), &Projector::Linear { weight, bias: None })?;
    let ens_s = t.elapsed().as_secs_f64();

    let latents = Tensor::from_fn(&[cfg.output_tokens(), c], |i| ((i as f64) * 0.37).sin() * 0.02);
    let t = Instant::now();
    let res = resampler(&latents, &maps, &ResamplerParams::identity(c))?;
    let res_s = t.elapsed().as_secs_f64();

    Ok(vec![
        ConnectorRecord {
            connector: "sva".into(),
            tokens: sva.tokens.rows(),
            channels: sva.tokens.last_dim(),
            seconds: sva_s,
        },
        ConnectorRecord {
            connector: "concat_ensemble".into(),
            tokens: ens.projected.rows(),
            channels: ens.projected.last_dim(),
            seconds: ens_s,
        },
        ConnectorRecord {
            connector: "resampler".into(),
            tokens: res.rows(),
            channels: res.last_dim(),
            seconds: res_s,
        },
    ])
}

pub fn cvbench_gen(scenes: &Path, offset_3d: f64, seed: u64) -> Result<Vec<QuestionItem>> {
    let scenes = Scene::read_jsonl(scenes)?;
    let cfg = GenConfig {
        seed,
        depth_offset: offset_3d,
        distance_offset: offset_3d,
        ..GenConfig::default()
    };
    Ok(generate_all(&scenes, &cfg)?)
}

pub fn cvbench_score(graded: &Path) -> Result<CvBenchScore> {
    let items: Vec<GradedItem> = jsonl::read_file(graded)?;
    Ok(score_cvbench(&items)?)
}

pub fn curate_balance(pool: &Path, t: usize, seed: u64) -> Result<DataPool> {
    Ok(apply_threshold(&DataPool::read_jsonl(pool)?, t, seed)?)
}

pub fn curate_mix(pool: &Path, ratios: Option<&Path>, n: usize, t: usize, seed: u64) -> Result<MixOutcome> {
    let ratios = match ratios {
        Some(p) => parse_ratios(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => default_ratios(),
    };
    let cfg = CuratorConfig {
        t,
        ratios,
        target_size: n,
        seed,
    };
    Ok(mix_by_ratio(&DataPool::read_jsonl(pool)?, &cfg)?)
}

const IMAGE_EXTS: [&str; 6] = ["png", "jpg", "jpeg", "gif", "bmp", "webp"];

fn image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let p = entry?.path();
        if p.is_dir() {
            out.extend(image_files(&p)?);
        } else if p
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTS.contains(&e.to_ascii_lowercase().as_str()))
        {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

/// Each subdirectory of `root` is one named image set; a root without
/// subdirectories is a single set named after it.
pub fn hash_sets(root: &Path) -> Result<Vec<NamedHashes>> {
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(root)
        .with_context(|| format!("listing {}", root.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    if subdirs.is_empty() {
        subdirs.push(root.to_path_buf());
    }
    subdirs
        .iter()
        .map(|d| {
            let name = d.file_name().and_then(|n| n.to_str()).unwrap_or("images").to_string();
            let hashes = image_files(d)?
                .iter()
                .map(|f| dhash_file(f).with_context(|| format!("hashing {}", f.display())))
                .collect::<Result<_>>()?;
            Ok(NamedHashes::new(name, hashes))
        })
        .collect()
}

pub fn curate_leak(train: &Path, tests: &Path, hamming: Option<u32>) -> Result<LeakageReport> {
    let mode = hamming.map_or(MatchMode::Exact, MatchMode::Hamming);
    Ok(leakage_scan(&hash_sets(train)?, &hash_sets(tests)?, mode))
}

pub fn curate_engine(field: &str, clients: &MockOrLive, journal: Option<&Path>, max_topics: Option<usize>) -> Result<EngineReport> {
    let mut journal = match journal {
        Some(p) => Journal::open(p)?,
        None => Journal::in_memory(),
    };
    let cfg = EngineConfig {
        max_topics,
        ..EngineConfig::default()
    };
    Ok(run_engine(field, &clients.as_engine(), &cfg, &mut journal)?)
}

/// Clients for the data engine, either replayed or over the network.
pub enum MockOrLive {
    Mock(MockClients),
    Live {
        chat: crate::live::HttpChat,
        search: crate::live::HttpSearch,
        fetcher: crate::live::HttpFetcher,
    },
}

impl MockOrLive {
    pub fn as_engine(&self) -> EngineClients<'_> {
        match self {
            MockOrLive::Mock(m) => EngineClients {
                chat: &m.chat,
                search: &m.search,
                fetcher: &m.fetcher,
            },
            MockOrLive::Live { chat, search, fetcher } => EngineClients { chat, search, fetcher },
        }
    }
}

pub fn eval_grade(responses: &Path, client: Option<&dyn ChatClient>) -> Result<Vec<GradedResponse>> {
    let items: Vec<Response> = jsonl::read_file(responses)?;
    Ok(grade_all(&items, client)?)
}

fn load_table(scores: &Path, meta: &Path) -> Result<ScoreTable> {
    let mut t = ScoreTable::from_csv_files(scores, meta)?;
    t.apply_overrides(&default_overrides());
    Ok(t)
}

pub fn eval_cluster(scores: &Path, meta: &Path, k: usize, seed: u64) -> Result<ClusterReport> {
    Ok(pca_cluster(&load_table(scores, meta)?, k, seed)?)
}

pub fn eval_gaps(enabled: &Path, disabled: &Path, meta: &Path) -> Result<Vec<GapEntry>> {
    let on = load_table(enabled, meta)?;
    let off = load_table(disabled, meta)?;
    let baselines: IndexMap<String, f64> = on
        .benchmarks
        .iter()
        .filter_map(|b| random_baseline(b).ok().map(|r| (b.name.clone(), r)))
        .collect();
    Ok(vision_gap_report(&on, &off, &baselines)?)
}
