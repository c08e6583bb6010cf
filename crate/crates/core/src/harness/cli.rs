//! The `uvaa` command line. Exit codes: 0 success, 1 invalid configuration
//! or arguments, 2 runtime failure, 3 checkpoint mismatch, 4 empty run
//! directory, 5 unplottable input.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use super::{plot, tasks, ExperimentConfig, HarnessError, PolicySource, RunManifest};

pub const THREADS_VAR: &str = "UVAA_THREADS";

#[derive(Debug, Parser)]
#[command(name = "uvaa", version, about = "Multi-objective UAV virtual antenna array training")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Selection {
    BestF1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scripted {
    Hover,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run warm-up and evolution, writing archives, telemetry and metrics.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Roll out one policy on evaluation episodes and report objectives.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, conflicts_with_all = ["select", "scripted"])]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum, requires = "run_dir", conflicts_with = "scripted")]
        select: Option<Selection>,
        /// Run directory searched by `--select`.
        #[arg(long)]
        run_dir: Option<PathBuf>,
        #[arg(long, value_enum)]
        scripted: Option<Scripted>,
        /// Defaults to `evolution.n_eval`.
        #[arg(long)]
        episodes: Option<usize>,
        /// Defaults to the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// IGD and hypervolume of one or more runs against a shared reference.
    Metrics {
        #[arg(required = true)]
        run_dirs: Vec<PathBuf>,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// SVG charts of a metrics CSV and archive CSVs.
    Plot {
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long = "ep")]
        archives: Vec<PathBuf>,
        /// Run manifest providing objective names and units.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-slot JSON lines of one episode.
    EnvTrace {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Drive the swarm with this policy instead of hovering.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn threads_from_env() -> Result<Option<usize>, HarnessError> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(HarnessError::InvalidConfig(format!("{THREADS_VAR} must be a positive integer, got '{v}'"))),
        },
    }
}

fn create(path: &PathBuf) -> Result<std::io::BufWriter<std::fs::File>, HarnessError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| HarnessError::Runtime(format!("{}: {e}", parent.display())))?;
    }
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| HarnessError::Runtime(format!("{}: {e}", path.display())))
}

fn execute(cmd: Command, threads: usize) -> Result<(), HarnessError> {
    match cmd {
        Command::Train { config, output_dir } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            let out = tasks::train(&cfg, threads)?;
            log::info!("archive size {} written to {}", out.archive.len(), cfg.output_dir.display());
            Ok(())
        }
        Command::Evaluate {
            config,
            checkpoint,
            select,
            run_dir,
            scripted,
            episodes,
            seed,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let source = match (checkpoint, select, scripted) {
                (Some(p), _, _) => PolicySource::Checkpoint(p),
                (None, Some(Selection::BestF1), _) => PolicySource::BestF1(run_dir.expect("required by clap")),
                (None, None, Some(Scripted::Hover)) => PolicySource::Hover,
                (None, None, None) => {
                    return Err(HarnessError::InvalidConfig("one of --checkpoint, --select or --scripted is required".into()))
                }
            };
            let report = tasks::evaluate(&cfg, &source, episodes.unwrap_or(cfg.evolution.n_eval), seed.unwrap_or(cfg.seed))?;
            let text = serde_json::to_string_pretty(&report).map_err(HarnessError::runtime)?;
            println!("{text}");
            if let Some(path) = out {
                std::fs::write(&path, &text).map_err(|e| HarnessError::Runtime(format!("{}: {e}", path.display())))?;
            }
            Ok(())
        }
        Command::Metrics { run_dirs, out } => {
            let summary = tasks::summarize_runs(&run_dirs)?;
            match out {
                Some(path) => summary.write_csv(create(&path)?),
                None => summary.write_csv(std::io::stdout().lock()),
            }
        }
        Command::Plot {
            metrics,
            archives,
            manifest,
            out,
        } => {
            let objectives = match manifest {
                Some(p) => Some(RunManifest::read(&p).map_err(|e| HarnessError::PlotInput(e.to_string()))?.objectives),
                None => None,
            };
            for path in plot::render(&metrics, &archives, objectives.as_deref(), &out)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::EnvTrace {
            config,
            seed,
            checkpoint,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let env = cfg.resolved_env();
            let policy = checkpoint.map(|p| tasks::load_policy(&p, &env)).transpose()?;
            match out {
                Some(path) => tasks::write_env_trace(&env, seed, policy.as_ref(), create(&path)?),
                None => tasks::write_env_trace(&env, seed, policy.as_ref(), std::io::stdout().lock()),
            }
            .map(|_| ())
        }
    }
}

/// Parse `args`, run the command and return the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = threads_from_env().and_then(|threads| match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(HarnessError::runtime)?;
            pool.install(|| execute(cli.command, n))
        }
        None => execute(cli.command, rayon::current_num_threads()),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
