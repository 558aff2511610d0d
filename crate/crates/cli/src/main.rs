//! `ietnet`: generate data, train, evaluate, explain, ablate, sweep.
//!
//! Exit codes: 0 success, 2 usage error, 3 runtime failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{EvalFlags, ModelFlags, NBodyFlags, RunConfig, TrainFlags};
use ietnet::data::Split;

/// Invalid arguments or configuration (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "ietnet", version, about = "Explainable multivariate time-series classification")]
struct Cli {
    /// TOML or JSON run configuration; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: IETNET_THREADS, else all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the two-class N-body benchmark
    GenNbody {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        nbody: NBodyFlags,
    },
    /// Convert a CSV plus JSON sidecar into a dataset directory
    ImportCsv {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        meta: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model; writes checkpoint, log, and resolved config
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        model: ModelFlags,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Evaluate a checkpoint; writes a JSON report with ROC and heatmap CSVs
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        split: Option<Split>,
        #[arg(long)]
        report: PathBuf,
        #[command(flatten)]
        eval: EvalFlags,
    },
    /// Write per-instance channel gates and aggregated heatmaps
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Only write this sample's gate
        #[arg(long)]
        instance: Option<String>,
        #[arg(long)]
        split: Option<Split>,
        #[command(flatten)]
        eval: EvalFlags,
    },
    /// Drop channels, retrain, and compare against the full-channel model
    Ablate {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated channel names
        #[arg(long, value_delimiter = ',')]
        drop: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Train only the ablated model
        #[arg(long)]
        skip_baseline: bool,
        #[command(flatten)]
        model: ModelFlags,
        #[command(flatten)]
        train: TrainFlags,
        #[command(flatten)]
        eval: EvalFlags,
    },
    /// Confusion counts over a range of operating points
    Sweep {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Output CSV
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        split: Option<Split>,
        /// Evenly spaced thresholds over [0, 1]
        #[arg(long, default_value_t = 21)]
        points: usize,
        /// Explicit comma-separated thresholds (overrides --points)
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
    },
}

fn init_threads(threads: Option<usize>) -> anyhow::Result<()> {
    let n = match threads {
        Some(n) => Some(n),
        None => match std::env::var("IETNET_THREADS") {
            Ok(v) => Some(
                v.parse()
                    .map_err(|_| UsageError(format!("IETNET_THREADS must be a number, got {v:?}")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(UsageError("thread count must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    init_threads(cli.threads)?;
    let mut cfg = RunConfig::load(cli.config.as_deref()).map_err(|e| UsageError(format!("{e:#}")))?;
    match cli.command {
        Command::GenNbody { out, nbody } => {
            nbody.apply(&mut cfg.nbody);
            commands::gen_nbody(&cfg, &out)
        }
        Command::ImportCsv { csv, meta, out } => commands::import(&csv, &meta, &out),
        Command::Train { data, out, model, train } => {
            model.apply(&mut cfg.model);
            train.apply(&mut cfg.train);
            let d = ietnet::data::load_dataset(&data)?;
            commands::train_on(&cfg, &d, &out).map(|_| ())
        }
        Command::Eval {
            model,
            data,
            split,
            report,
            eval,
        } => {
            eval.apply(&mut cfg.eval);
            if let Some(s) = split {
                cfg.eval.split = s;
            }
            commands::eval(&cfg, &model, &data, &report)
        }
        Command::Explain {
            model,
            data,
            out,
            instance,
            split,
            eval,
        } => {
            eval.apply(&mut cfg.eval);
            if let Some(s) = split {
                cfg.eval.split = s;
            }
            commands::explain(&cfg, &model, &data, &out, instance.as_deref())
        }
        Command::Ablate {
            data,
            drop,
            out,
            skip_baseline,
            model,
            train,
            eval,
        } => {
            model.apply(&mut cfg.model);
            train.apply(&mut cfg.train);
            eval.apply(&mut cfg.eval);
            commands::ablate(&cfg, &data, &drop, &out, skip_baseline)
        }
        Command::Sweep {
            model,
            data,
            out,
            split,
            points,
            thresholds,
        } => {
            if let Some(s) = split {
                cfg.eval.split = s;
            }
            commands::sweep(&cfg, &model, &data, &out, points, thresholds)
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let usage = e.chain().any(|c| {
        c.is::<UsageError>() || matches!(c.downcast_ref::<ietnet::Error>(), Some(ietnet::Error::Config(_)))
    });
    if usage {
        2
    } else {
        3
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
