//! `cgstitch`: command-line front end over a persistent partial-graph pool.
//!
//! Machine-readable JSON goes to stdout, diagnostics to stderr. A failed
//! command prints nothing on stdout and exits with
//! 1 (usage), 2 (input), 3 (artifact not found) or 4 (internal).

use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use cgstitch_core::bench::run_bench;
use cgstitch_core::depset::{mediate, parse_set, parse_tree, ArtifactSource, DependencyTree, Fetcher};
use cgstitch_core::engine::{DependencyInput, Engine, EngineError, ErrorClass};
use cgstitch_core::model::{parse_coordinate, MavenCoordinate};
use cgstitch_core::pool::{Pool, PoolError};
use cgstitch_core::stitch::{phase_stats_json, StitchOptions};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "cgstitch", version, about = "Call graphs stitched from pooled per-package graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PoolArg {
    /// Pool directory
    #[arg(long, env = "CGSTITCH_POOL", value_name = "DIR")]
    pool: PathBuf,
}

#[derive(Args)]
struct JobsArg {
    /// Cap on worker threads
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a local jar and store its partial graph in the pool
    Ingest {
        #[arg(long, value_name = "PATH")]
        jar: PathBuf,
        #[arg(long, value_name = "G:A:V", value_parser = parse_coordinate)]
        coordinate: MavenCoordinate,
        #[command(flatten)]
        pool: PoolArg,
        #[command(flatten)]
        jobs: JobsArg,
    },
    /// Print the nearest-wins resolution of a dependency tree
    Resolve {
        #[arg(long, value_name = "FILE")]
        tree: PathBuf,
    },
    /// Build the full call graph of a dependency tree or set
    Stitch {
        #[arg(long, value_name = "FILE", required_unless_present = "set", conflicts_with = "set")]
        tree: Option<PathBuf>,
        /// One coordinate per line, in classpath order
        #[arg(long, value_name = "FILE")]
        set: Option<PathBuf>,
        #[command(flatten)]
        pool: PoolArg,
        /// Maven repository directory or http(s) URL
        #[arg(long, value_name = "DIR|URL")]
        repo: ArtifactSource,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Drop edges whose target is an abstract method
        #[arg(long)]
        no_abstract_targets: bool,
        #[command(flatten)]
        jobs: JobsArg,
    },
    /// Time each pipeline phase over several trees
    Bench {
        #[arg(long, value_name = "FILE", num_args = 1.., required = true)]
        trees: Vec<PathBuf>,
        #[command(flatten)]
        pool: PoolArg,
        #[arg(long, value_name = "DIR|URL")]
        repo: ArtifactSource,
        #[arg(long, value_name = "N", default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
        rounds: u32,
        /// Also write the report as CSV
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        #[command(flatten)]
        jobs: JobsArg,
    },
    /// Print the pool's accumulated counters
    PoolStats {
        #[command(flatten)]
        pool: PoolArg,
    },
    /// Serve stitching over HTTP until interrupted
    Serve {
        #[arg(long, value_name = "HOST:PORT", default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[command(flatten)]
        pool: PoolArg,
        #[arg(long, value_name = "DIR|URL")]
        repo: ArtifactSource,
        #[command(flatten)]
        jobs: JobsArg,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{message}")]
    NotFound { message: String },
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::NotFound { .. } => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        let message = e.to_string();
        match e.class() {
            ErrorClass::NotFound(_) => CliError::NotFound { message },
            ErrorClass::Input => CliError::Input(message),
            ErrorClass::Internal => CliError::Internal(message),
        }
    }
}

impl From<PoolError> for CliError {
    fn from(e: PoolError) -> Self {
        EngineError::Pool(e).into()
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_tree(path: &Path) -> Result<DependencyTree, CliError> {
    parse_tree(&read_input(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn open_pool(dir: &Path) -> Result<Arc<Pool>, CliError> {
    Ok(Arc::new(Pool::open(dir)?))
}

fn engine(pool: Arc<Pool>, repo: Option<ArtifactSource>, jobs: &JobsArg) -> Engine {
    let fetcher = match repo {
        Some(source @ ArtifactSource::Remote(_)) => {
            Fetcher::new(source).with_cache_dir(pool.root().join(".artifacts"))
        }
        Some(source) => Fetcher::new(source),
        // ingest never fetches
        None => Fetcher::new(ArtifactSource::Local(PathBuf::new())),
    };
    let engine = Engine::new(pool, Arc::new(fetcher));
    match jobs.jobs {
        Some(n) => engine.with_jobs(n.into()),
        None => engine,
    }
}

/// Writes `path` completely or not at all.
fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let fail = |e: std::io::Error| CliError::Input(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut temp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    temp.write_all(contents.as_bytes()).map_err(fail)?;
    temp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

/// Runs `body`, then folds the session's counters into the pool's totals
/// whether or not the body succeeded.
fn with_stats<T>(pool: &Pool, body: impl FnOnce() -> Result<T, CliError>) -> Result<T, CliError> {
    let result = body();
    let persisted = pool.persist_stats();
    let value = result?;
    persisted?;
    Ok(value)
}

fn execute(command: Command) -> Result<Value, CliError> {
    match command {
        Command::Ingest {
            jar,
            coordinate,
            pool,
            jobs,
        } => {
            let pool = open_pool(&pool.pool)?;
            let engine = engine(pool.clone(), None, &jobs);
            let summary = with_stats(&pool, || Ok(engine.ingest_jar(&jar, &coordinate)?))?;
            Ok(summary.to_json())
        }
        Command::Resolve { tree } => Ok(mediate(&load_tree(&tree)?).to_json()),
        Command::Stitch {
            tree,
            set,
            pool,
            repo,
            out,
            no_abstract_targets,
            jobs,
        } => {
            let input = match (tree, set) {
                (Some(tree), _) => DependencyInput::Tree(load_tree(&tree)?),
                (None, Some(set)) => DependencyInput::Set(
                    parse_set(&read_input(&set)?)
                        .map_err(|e| CliError::Input(format!("{}: {e}", set.display())))?,
                ),
                (None, None) => unreachable!("clap requires one of --tree and --set"),
            };
            let options = StitchOptions {
                include_abstract_targets: !no_abstract_targets,
                ..StitchOptions::default()
            };
            let pool = open_pool(&pool.pool)?;
            let engine = engine(pool.clone(), Some(repo), &jobs);
            let run = with_stats(&pool, || Ok(engine.run(&input, &options)?))?;
            write_file(&out, &run.cg.to_canonical_json(None))?;

            let mut timings = phase_stats_json(run.phases());
            timings["generations"] = json!(run.generations);
            timings["parses"] = json!(run.parses);
            eprintln!("{timings}");
            let mut summary = run.counters_json();
            summary["dynamic"] = json!(run.cg.dynamic.len());
            summary["edges"] = json!(run.cg.edges.len());
            summary["nodes"] = json!(run.cg.nodes.len());
            summary["out"] = json!(out.display().to_string());
            summary["unresolved"] = json!(run.cg.unresolved.len());
            Ok(summary)
        }
        Command::Bench {
            trees,
            pool,
            repo,
            rounds,
            csv,
            jobs,
        } => {
            let labelled = trees
                .iter()
                .map(|p| {
                    let label = p.file_stem().map_or_else(
                        || p.display().to_string(),
                        |s| s.to_string_lossy().into_owned(),
                    );
                    Ok((label, load_tree(p)?))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let pool = open_pool(&pool.pool)?;
            let engine = engine(pool.clone(), Some(repo), &jobs);
            let report = with_stats(&pool, || {
                Ok(run_bench(&engine, &labelled, rounds as usize, &StitchOptions::default())?)
            })?;
            if let Some(path) = csv {
                write_file(&path, &report.to_csv())?;
            }
            eprint!("{}", report.to_text());
            Ok(report.to_json())
        }
        Command::PoolStats { pool } => Ok(open_pool(&pool.pool)?.persisted_stats()?.to_json()),
        Command::Serve {
            listen,
            pool,
            repo,
            jobs,
        } => {
            let pool = open_pool(&pool.pool)?;
            let engine = Arc::new(engine(pool.clone(), Some(repo), &jobs));
            with_stats(&pool, || serve(listen, engine))?;
            Ok(json!({"stopped": listen.to_string()}))
        }
    }
}

fn serve(listen: SocketAddr, engine: Arc<Engine>) -> Result<(), CliError> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(listen)
            .await
            .map_err(|e| CliError::Input(format!("cannot listen on {listen}: {e}")))?;
        let local = listener.local_addr().map_err(|e| CliError::Internal(e.to_string()))?;
        eprintln!("listening on http://{local}");
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        cgstitch_service::serve(listener, engine, shutdown)
            .await
            .map_err(|e| CliError::Internal(e.to_string()))
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(value) => {
            println!("{value}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
