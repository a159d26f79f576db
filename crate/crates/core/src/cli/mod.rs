//! The `wassmatrix` command line.
//!
//! Exit codes: 0 on success, 1 for usage, input and configuration errors,
//! 2 when a numerical routine fails.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

pub use config::{Algorithm, ExperimentConfig};

use crate::error::Error;

#[derive(Debug, Parser)]
#[command(
    name = "wassmatrix",
    version,
    about = "Estimate and embed squared Wasserstein distance matrices"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON experiment configuration.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set mc.rank=4`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Threads for transport solves (default: $WASSMATRIX_WORKERS, else all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Default)]
pub struct SourceArgs {
    /// Directory of `.measure`, `.pgm` or `.csv` files, optionally with labels.csv.
    #[arg(long, value_name = "DIR")]
    pub dataset: Option<PathBuf>,
    /// Synthetic dataset: translations[:N], translations:gridK, dilations[:N], classes3[:N].
    #[arg(long, value_name = "SPEC")]
    pub synthetic: Option<String>,
    /// Dataset size for synthetic specs that carry none.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub data_seed: Option<u64>,
    /// Pixels at or below this value are dropped from image files.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute exact distances for a full matrix or a sample plan.
    Dist(DistArgs),
    /// Complete a partially observed matrix.
    Complete(CompleteArgs),
    /// Classical MDS of a complete matrix.
    Embed(EmbedArgs),
    /// Relative Frobenius error of an estimate against a full matrix.
    Eval(EvalArgs),
    /// Classification accuracy of embeddings, or the column-stability experiment.
    Classify(ClassifyArgs),
    /// Column count matching the entry budget at a sampling rate.
    Budget(BudgetArgs),
    /// Write a synthetic dataset to a directory.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct DistArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Compute every entry.
    #[arg(long, conflicts_with_all = ["rate", "columns"])]
    pub full: bool,
    /// Sample this fraction of the upper-triangle entries.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Sample this many full columns.
    #[arg(long)]
    pub columns: Option<usize>,
    /// Write the plan and manifest without solving any transport problem.
    #[arg(long)]
    pub plan_only: bool,
    /// Matrix file; the plan, manifest and timings go next to it.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompleteArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub algorithm: Option<AlgorithmArg>,
    /// Full matrix to report the relative error against.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum AlgorithmArg {
    Mc,
    Nystrom,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, conflicts_with = "energy")]
    pub dimension: Option<usize>,
    /// Pick the smallest dimension retaining this share of the spectrum.
    #[arg(long)]
    pub energy: Option<f64>,
    /// `index,label` file whose labels are appended to the output.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// CSV output; metadata goes to the same stem with `.meta.json`.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub estimate: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Matrix whose sampled columns feed the stability experiment.
    #[arg(long, conflicts_with = "embedding")]
    pub matrix: Option<PathBuf>,
    /// Score an existing embedding on a single split instead.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    /// Labels as `index,label`; defaults to the dataset's or embedding's own.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Comma-separated column fractions.
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub energy: Option<f64>,
    #[arg(long)]
    pub dimension: Option<usize>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Comma-separated list from knn1, lda.
    #[arg(long, value_delimiter = ',')]
    pub classifiers: Option<Vec<String>>,
    /// Fraction recorded for an embedding run.
    #[arg(long, requires = "embedding")]
    pub fraction: Option<f64>,
    /// Output directory for accuracy.csv, summary.json and series.csv.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub rate: f64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, short)]
    pub out: PathBuf,
}

fn put<T: serde::Serialize>(flags: &mut Map<String, Value>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        flags.insert(key.to_string(), json!(v));
    }
}

impl SourceArgs {
    fn flags(&self, flags: &mut Map<String, Value>) {
        put(flags, "dataset", self.dataset.clone());
        put(flags, "synthetic", self.synthetic.clone());
        put(flags, "n", self.n);
        put(flags, "data_seed", self.data_seed);
        put(flags, "threshold", self.threshold);
    }
}

impl Cli {
    /// Flags given on the command line, as configuration keys.
    fn flags(&self) -> Map<String, Value> {
        let mut f = Map::new();
        put(&mut f, "workers", self.global.workers);
        put(&mut f, "seed", self.global.seed);
        match &self.command {
            Command::Dist(a) => {
                a.source.flags(&mut f);
                if a.full {
                    f.insert("rate".into(), Value::Null);
                    f.insert("columns".into(), Value::Null);
                }
                put(&mut f, "rate", a.rate);
                put(&mut f, "columns", a.columns);
            }
            Command::Complete(a) => {
                put(
                    &mut f,
                    "algorithm",
                    a.algorithm.map(|a| match a {
                        AlgorithmArg::Mc => "mc",
                        AlgorithmArg::Nystrom => "nystrom",
                    }),
                );
            }
            Command::Embed(a) => {
                put(&mut f, "dimension", a.dimension);
                put(&mut f, "energy", a.energy);
                if a.energy.is_some() {
                    f.insert("dimension".into(), Value::Null);
                }
            }
            Command::Classify(a) => {
                a.source.flags(&mut f);
                put(&mut f, "fractions", a.fractions.clone());
                put(&mut f, "trials", a.trials);
                put(&mut f, "energy", a.energy);
                put(&mut f, "dimension", a.dimension);
                put(&mut f, "test_fraction", a.test_fraction);
                put(&mut f, "classifiers", a.classifiers.clone());
            }
            Command::Synth(a) => a.source.flags(&mut f),
            Command::Eval(_) | Command::Budget(_) => {}
        }
        f
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result =
        ExperimentConfig::resolve(cli.global.config.as_deref(), &cli.global.set, cli.flags())
            .and_then(|cfg| commands::dispatch(&cli.command, &cfg));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}
