use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use forge_cli::commands::{self, MockOrLive};
use forge_cli::live::{HttpChat, HttpFetcher, HttpSearch};
use forge_cli::mock::MockClients;
use forge_cli::server;
use forge_core::curator::engine::ChatClient;
use forge_core::jsonl;
use forge_core::review::ReviewStore;

#[derive(Parser)]
#[command(name = "forge", version, about = "Connector checks, benchmark generation, data curation and evaluation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Spatial vision aggregator checks.
    Sva {
        #[command(subcommand)]
        cmd: SvaCmd,
    },
    /// Aggregator against the baseline connectors.
    Connector {
        #[command(subcommand)]
        cmd: ConnectorCmd,
    },
    /// Vision-centric benchmark generation and scoring.
    Cvbench {
        #[command(subcommand)]
        cmd: CvbenchCmd,
    },
    /// Instruction-data curation.
    Curate {
        #[command(subcommand)]
        cmd: CurateCmd,
    },
    /// Grading and benchmark analytics.
    Eval {
        #[command(subcommand)]
        cmd: EvalCmd,
    },
    /// Human review service.
    Review {
        #[command(subcommand)]
        cmd: ReviewCmd,
    },
}

#[derive(Subcommand)]
enum SvaCmd {
    /// Forward pass, attention checks and gradient check; one JSON record per check.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum ConnectorCmd {
    /// Token counts and timings for every connector.
    Compare {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum CvbenchCmd {
    /// Generate question items from annotated scenes.
    Gen {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long = "offset-3d", default_value_t = 0.3)]
        offset_3d: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Item file to write; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score graded items.
    Score {
        #[arg(long)]
        graded: PathBuf,
    },
}

#[derive(Subcommand)]
enum CurateCmd {
    /// Cap every source at `t` records.
    Balance {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long, default_value_t = 250_000)]
        t: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample `n` records following per-category ratios.
    Mix {
        #[arg(long)]
        pool: PathBuf,
        /// Ratio file; the bundled preset when absent.
        #[arg(long)]
        ratios: Option<PathBuf>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 250_000)]
        t: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count test images that also occur in training sets.
    Leak {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        tests: PathBuf,
        /// Match within this Hamming distance instead of exactly.
        #[arg(long)]
        hamming: Option<u32>,
        /// Print JSON instead of the text table.
        #[arg(long)]
        json: bool,
    },
    /// Run the targeted data engine for one field.
    Engine {
        #[arg(long)]
        field: String,
        /// Use replayed responses instead of network clients.
        #[arg(long)]
        mock: bool,
        /// Replay fixture for --mock; built-in demo answers when absent.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        #[arg(long)]
        journal: Option<PathBuf>,
        #[arg(long)]
        max_topics: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum EvalCmd {
    /// Grade model responses.
    Grade {
        #[arg(long)]
        responses: PathBuf,
        /// Ask a chat model instead of rule-based matching.
        #[arg(long)]
        llm: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// PCA projection and k-means clustering of benchmarks.
    Cluster {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        meta: PathBuf,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write plot coordinates and labels here.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Score change when visual input is disabled.
    Gaps {
        #[arg(long)]
        enabled: PathBuf,
        #[arg(long)]
        disabled: PathBuf,
        #[arg(long)]
        meta: PathBuf,
    },
}

#[derive(Subcommand)]
enum ReviewCmd {
    /// Serve the review HTTP API.
    Serve {
        #[arg(long)]
        items: PathBuf,
        #[arg(long)]
        journal: PathBuf,
        #[arg(long, default_value_t = 8787)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn emit_lines<T: Serialize>(records: &[T], out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => jsonl::write_file(p, records).with_context(|| format!("writing {}", p.display()))?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            jsonl::write(&mut lock, records)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Sva {
            cmd: SvaCmd::Bench { config },
        } => {
            let records = commands::sva_bench_cmd(&config)?;
            emit_lines(&records, None)?;
            return Ok(records.iter().all(|r| r.pass));
        }
        Cmd::Connector {
            cmd: ConnectorCmd::Compare { config },
        } => emit_lines(&commands::connector_compare(&config)?, None)?,
        Cmd::Cvbench { cmd } => match cmd {
            CvbenchCmd::Gen {
                scenes,
                offset_3d,
                seed,
                out,
            } => {
                let items = commands::cvbench_gen(&scenes, offset_3d, seed)?;
                emit_lines(&items, out.as_deref())?;
                eprintln!("{} items", items.len());
            }
            CvbenchCmd::Score { graded } => print_json(&commands::cvbench_score(&graded)?)?,
        },
        Cmd::Curate { cmd } => match cmd {
            CurateCmd::Balance { pool, t, seed, out } => {
                let p = commands::curate_balance(&pool, t, seed)?;
                emit_lines(&p.records, out.as_deref())?;
                eprintln!("{} records after capping sources at {t}", p.len());
            }
            CurateCmd::Mix {
                pool,
                ratios,
                n,
                t,
                seed,
                out,
            } => {
                let m = commands::curate_mix(&pool, ratios.as_deref(), n, t, seed)?;
                emit_lines(&m.pool.records, out.as_deref())?;
                for (c, short) in &m.shortfall {
                    eprintln!("{c}: {short} records short of target, redistributed");
                }
            }
            CurateCmd::Leak {
                train,
                tests,
                hamming,
                json,
            } => {
                let r = commands::curate_leak(&train, &tests, hamming)?;
                if json {
                    print_json(&r)?;
                } else {
                    print!("{}", r.to_table());
                }
            }
            CurateCmd::Engine {
                field,
                mock,
                fixtures,
                journal,
                max_topics,
                out,
            } => {
                let clients = if mock {
                    MockOrLive::Mock(match fixtures {
                        Some(f) => MockClients::from_file(f)?,
                        None => MockClients::demo(&field),
                    })
                } else {
                    MockOrLive::Live {
                        chat: HttpChat::from_env()?,
                        search: HttpSearch::from_env()?,
                        fetcher: HttpFetcher::default(),
                    }
                };
                let report = commands::curate_engine(&field, &clients, journal.as_deref(), max_topics)?;
                emit_lines(&report.items, out.as_deref())?;
                eprintln!(
                    "{} topics, {} pages ({} failed), {} images, {} items, {} rejected",
                    report.topics,
                    report.pages,
                    report.failed_pages,
                    report.tuples,
                    report.items.len(),
                    report.rejections.len()
                );
            }
        },
        Cmd::Eval { cmd } => match cmd {
            EvalCmd::Grade { responses, llm, out } => {
                let chat = if llm { Some(HttpChat::from_env()?) } else { None };
                let graded = commands::eval_grade(&responses, chat.as_ref().map(|c| c as &dyn ChatClient))?;
                emit_lines(&graded, out.as_deref())?;
                let correct = graded.iter().filter(|g| g.verdict.is_correct()).count();
                eprintln!("{correct}/{} correct", graded.len());
            }
            EvalCmd::Cluster {
                scores,
                meta,
                k,
                seed,
                plot,
            } => {
                let r = commands::eval_cluster(&scores, &meta, k, seed)?;
                if let Some(p) = plot {
                    jsonl::write_file(&p, &r.points).with_context(|| format!("writing {}", p.display()))?;
                }
                print_json(&r)?;
            }
            EvalCmd::Gaps {
                enabled,
                disabled,
                meta,
            } => emit_lines(&commands::eval_gaps(&enabled, &disabled, &meta)?, None)?,
        },
        Cmd::Review {
            cmd: ReviewCmd::Serve {
                items,
                journal,
                port,
                host,
            },
        } => {
            let store = Arc::new(ReviewStore::open(&items, &journal)?);
            let addr: SocketAddr = format!("{host}:{port}").parse().context("bad --host/--port")?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(server::serve(store, addr))?;
        }
    }
    Ok(true)
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => {}
        Ok(false) => std::process::exit(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}
