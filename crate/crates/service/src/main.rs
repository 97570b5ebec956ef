use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use goldilocks_core::analysis::analyze;
use goldilocks_core::exec::Execution;
use goldilocks_core::model::{AnnotatorId, ItemId, Timestamp};
use goldilocks_core::simulation::{replicate, run_experiment};
use goldilocks_service::api::{router, AppState};
use goldilocks_service::config::Settings;
use goldilocks_service::dataset::{ingest, AnchorsFile};
use goldilocks_service::export::{corpus, parse_jsonl};
use goldilocks_service::simulate::write_simulation;
use goldilocks_service::state::ColdStartOp;
use goldilocks_service::store::Store;
use goldilocks_service::Service;

#[derive(Parser)]
#[command(name = "goldilocks", version, about = "Range annotation service and analysis tools")]
struct Cli {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run analysis on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        bind: Option<String>,
    },
    /// Create a dataset from an items file (NDJSON) and an optional anchors file (JSON).
    Ingest {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        items: PathBuf,
        #[arg(long)]
        anchors: Option<PathBuf>,
    },
    /// Build the seed anchor set.
    ColdStart {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        dataset: String,
        #[command(subcommand)]
        op: ColdStartCommand,
    },
    /// Analyze a dataset in a data directory or an export file.
    Analyze {
        #[arg(long, requires = "dataset", conflicts_with = "input")]
        data: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<String>,
        /// A JSONL export.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run the simulation study; with --data, also record replication 0 as sessions.
    Simulate {
        #[arg(long)]
        replications: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long, requires = "dataset")]
        data: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<String>,
    },
    /// Export a dataset's annotations.
    Export {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        dataset: String,
        /// jsonl or csv
        #[arg(long, default_value = "jsonl")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ColdStartCommand {
    /// Start a draft, optionally with semantic labels from an anchors file.
    Open {
        #[arg(long)]
        semantic: Option<PathBuf>,
    },
    Draw {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    Drop {
        #[arg(long)]
        item: String,
    },
    Place {
        #[arg(long)]
        annotator: String,
        #[arg(long)]
        item: String,
        #[arg(long)]
        pos: f64,
    },
    Finalize {
        #[arg(long, default_value_t = 1)]
        min_count: usize,
    },
    Reintroduce {
        #[arg(long)]
        item: String,
    },
    Show,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

fn open_service(settings: &Settings, data: Option<PathBuf>) -> Result<Service> {
    let dir = data.unwrap_or_else(|| settings.service.data_dir.clone());
    let (store, recovery) =
        Store::open(&dir, settings.service.snapshot_every).with_context(|| format!("opening {}", dir.display()))?;
    if recovery.discarded_bytes > 0 {
        eprintln!(
            "recovered {}: dropped {} bytes of an incomplete final record",
            dir.display(),
            recovery.discarded_bytes
        );
    }
    let mut svc = Service::new(store);
    svc.partition_size = settings.service.partition_size;
    svc.seed = settings.seed;
    Ok(svc)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Writes to stdout; a closed pipe (as with `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    emit(&(serde_json::to_string_pretty(value)? + "\n"))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let settings = match &cli.config {
        Some(p) => Settings::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => Settings::default(),
    }
    .with_seed(cli.seed);
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };

    match cli.command {
        Command::Serve { data, bind } => {
            let mut svc = open_service(&settings, data)?;
            svc.execution = exec;
            let bind = bind.unwrap_or_else(|| settings.service.bind.clone());
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(&bind).await.with_context(|| format!("binding {bind}"))?;
                eprintln!("listening on {}", listener.local_addr()?);
                axum::serve(listener, router(AppState::new(svc)))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await?;
                anyhow::Ok(())
            })?;
        }
        Command::Ingest { data, dataset, items, anchors } => {
            let anchors_text = anchors.as_deref().map(read).transpose()?;
            let ds = ingest(&dataset, &read(&items)?, anchors_text.as_deref())?;
            let mut svc = open_service(&settings, data)?;
            print_json(&svc.create_dataset(ds)?)?;
        }
        Command::ColdStart { data, dataset, op } => {
            let mut svc = open_service(&settings, data)?;
            match op {
                ColdStartCommand::Open { semantic } => {
                    let semantic = match semantic {
                        Some(p) => AnchorsFile::parse(&read(&p)?)?.to_pool()?.semantic().to_vec(),
                        None => Vec::new(),
                    };
                    svc.cold_start(&dataset, ColdStartOp::Open { semantic })?;
                }
                ColdStartCommand::Draw { n, seed } => print_json(&svc.cold_start_draw(&dataset, n, seed)?)?,
                ColdStartCommand::Drop { item } => {
                    svc.cold_start(&dataset, ColdStartOp::Drop { item: ItemId::new(item) })?;
                }
                ColdStartCommand::Place { annotator, item, pos } => {
                    svc.cold_start(
                        &dataset,
                        ColdStartOp::Place { annotator: AnnotatorId::new(annotator), item: ItemId::new(item), pos },
                    )?;
                }
                ColdStartCommand::Finalize { min_count } => {
                    svc.cold_start(&dataset, ColdStartOp::Finalize { min_count })?;
                    print_json(&svc.dataset_summary(&dataset)?)?;
                }
                ColdStartCommand::Reintroduce { item } => {
                    svc.cold_start(&dataset, ColdStartOp::Reintroduce { item: ItemId::new(item) })?;
                }
                ColdStartCommand::Show => print_json(svc.draft(&dataset)?)?,
            }
        }
        Command::Analyze { data, dataset, input } => {
            let report = match (input, dataset) {
                (Some(path), _) => analyze(&corpus(&parse_jsonl(&read(&path)?)?)?, exec),
                (None, Some(ds)) => {
                    let mut svc = open_service(&settings, data)?;
                    svc.execution = exec;
                    svc.analyze(&ds)?
                }
                (None, None) => bail!("pass --input, or --dataset with an optional --data"),
            };
            print_json(&report)?;
        }
        Command::Simulate { replications, format, data, dataset } => {
            let world = settings.simulation.world.clone();
            let n = replications.unwrap_or(settings.simulation.replications);
            let report = run_experiment(&world, n, exec)?;
            match format {
                Format::Table => emit(&format!("{report}\n"))?,
                Format::Json => print_json(&report)?,
            }
            if let Some(ds) = dataset {
                let (w, ann) = replicate(&world, 0)?;
                let mut svc = open_service(&settings, data)?;
                let sessions = write_simulation(&mut svc, &ds, &w, &ann, Timestamp::from_millis(0))?;
                eprintln!("recorded replication 0 as {} sessions in dataset {ds}", sessions.len());
            }
        }
        Command::Export { data, dataset, format, out } => {
            let svc = open_service(&settings, data)?;
            let text = svc.export(&dataset, &format)?;
            match out {
                Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => emit(&text)?,
            }
        }
    }
    Ok(())
}
