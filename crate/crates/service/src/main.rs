use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Result;
use clap::{Parser, Subcommand};
use fedsearch::features::KeywordIntentTable;
use fedsearch::pipeline::{self, PipelineConfig};
use fedsearch::{Member, ScorerModel};
use fedsearch_service::{router, AppState, ServiceConfig};

#[derive(Parser)]
#[command(name = "fedsearch", version, about = "Personalized federated search", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic world: members, ground-truth intents, queries, corpora.
    Genworld {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        members: Option<usize>,
        #[arg(long)]
        docs: Option<usize>,
        #[arg(long)]
        queries: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build one BM25 index per corpus file.
    Index {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Infer intents for every member; with --truth, train the intent model first.
    Intents {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        population: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Reference time in Unix seconds; defaults to the configured world time.
        #[arg(long)]
        now: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate randomized SERPs and clicks into a click log.
    Collect {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        world: PathBuf,
        /// Members with inferred intents; defaults to the world's members.
        #[arg(long)]
        members: Option<PathBuf>,
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mine p(result category | query) from randomized click logs.
    MineKwint {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the federated scorer from click logs.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        population: PathBuf,
        #[arg(long)]
        kwint: PathBuf,
        /// L2 penalty on the weights.
        #[arg(long)]
        l2: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulated A/B test: rule baseline against the trained scorer.
    Ab {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        members: Option<PathBuf>,
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        kwint: PathBuf,
        /// Control arm; only the rule baseline is available.
        #[arg(long, value_enum, default_value_t = Control::Baseline)]
        control: Control,
        /// Trained scorer for the treatment arm.
        #[arg(long, alias = "model")]
        treatment: PathBuf,
        #[arg(long)]
        searches: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, alias = "out")]
        report: Option<PathBuf>,
    },
    /// Run every offline step into one work directory.
    Pipeline {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        workdir: PathBuf,
    },
    /// Serve search and click ingestion over HTTP.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Control {
    Baseline,
}

fn pipeline_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => Ok(pipeline::read_json(p)?),
        None => Ok(PipelineConfig::default()),
    }
}

fn print_report(report: &fedsearch::simulation::AbReport) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(report)?)?;
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Genworld {
            config,
            members,
            docs,
            queries,
            seed,
            out,
        } => {
            let mut config = pipeline_config(config.as_deref())?;
            let w = &mut config.world;
            w.n_members = members.unwrap_or(w.n_members);
            w.docs_per_vertical = docs.unwrap_or(w.docs_per_vertical);
            w.n_queries = queries.unwrap_or(w.n_queries);
            w.seed = seed.unwrap_or(w.seed);
            let world = pipeline::genworld(&config.world, &out)?;
            log::info!(
                "{} members, {} queries written to {}",
                world.population.len(),
                world.queries.len(),
                out.display()
            );
        }
        Command::Index { corpus, out } => {
            let indexes = pipeline::index(&corpus, &out)?;
            log::info!("{} indexes written to {}", indexes.len(), out.display());
        }
        Command::Intents {
            config,
            population,
            model,
            truth,
            now,
            out,
        } => {
            let config = pipeline_config(config.as_deref())?;
            let now = now.unwrap_or(config.world.now);
            pipeline::intents(&population, &model, truth.as_deref(), now, &config.intent, &out)?;
        }
        Command::Collect {
            config,
            world,
            members,
            index,
            out,
        } => {
            let config = pipeline_config(config.as_deref())?;
            let world = pipeline::load_world(&world, members.as_deref())?;
            let indexes = pipeline::load_indexes(&index)?;
            let logs = pipeline::collect(&world, &indexes, &config)?;
            pipeline::write_jsonl(&out, &logs)?;
        }
        Command::MineKwint { config, logs, out } => {
            let config = pipeline_config(config.as_deref())?;
            let logs = pipeline::read_click_log(&logs)?;
            pipeline::write_json(&out, &pipeline::mine_kwint(&logs, config.kwint))?;
        }
        Command::Train {
            config,
            logs,
            population,
            kwint,
            l2,
            out,
        } => {
            let mut config = pipeline_config(config.as_deref())?;
            config.scorer.l2_lambda = l2.unwrap_or(config.scorer.l2_lambda);
            let logs = pipeline::read_click_log(&logs)?;
            let members: Vec<Member> = pipeline::read_jsonl(&population)?;
            let table: KeywordIntentTable = pipeline::read_json(&kwint)?;
            let model = pipeline::train(&logs, &members, &table, &config)?;
            pipeline::write_json(&out, &model)?;
        }
        Command::Ab {
            config,
            world,
            members,
            index,
            kwint,
            control: Control::Baseline,
            treatment,
            searches,
            seed,
            report,
        } => {
            let mut config = pipeline_config(config.as_deref())?;
            config.ab_searches = searches.unwrap_or(config.ab_searches);
            config.ab_seed = seed.unwrap_or(config.ab_seed);
            let world = pipeline::load_world(&world, members.as_deref())?;
            let indexes = Arc::new(pipeline::load_indexes(&index)?);
            let table: KeywordIntentTable = pipeline::read_json(&kwint)?;
            let model: ScorerModel = pipeline::read_json(&treatment)?;
            let ab = pipeline::ab(&world, indexes, &table, &model, &config)?;
            if let Some(path) = report {
                pipeline::write_json(&path, &ab)?;
            }
            let report = ab;
            print_report(&report)?;
        }
        Command::Pipeline { config, workdir } => {
            let config = pipeline_config(config.as_deref())?;
            print_report(&pipeline::run_all(&config, &workdir)?)?;
        }
        Command::Serve { config } => {
            let config = ServiceConfig::load(&config)?;
            let state = Arc::new(AppState::load(&config)?);
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(&config.listen)
                    .await
                    .map_err(|e| anyhow::anyhow!("binding {}: {e}", config.listen))?;
                log::info!("listening on {}", listener.local_addr()?);
                axum::serve(listener, router(state))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await?;
                anyhow::Ok(())
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fedsearch: error: {e}");
            ExitCode::FAILURE
        }
    }
}
