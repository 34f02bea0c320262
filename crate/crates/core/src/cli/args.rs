use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};

use crate::datagen::{Family, Noise};

#[derive(Debug, Parser)]
#[command(
    name = "planeclust",
    version,
    about = "Robust fuzzy local k-plane clustering and benchmarks"
)]
pub struct Cli {
    /// Flat `key = value` file with default flag values; flags given on the
    /// command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model and print planes, labels and scores.
    #[command(args_override_self = true)]
    Fit(RunArgs),
    /// Repeat a fit over seeded restarts and aggregate scores.
    #[command(args_override_self = true)]
    Benchmark(RunArgs),
    /// Restart protocol over an (alpha, lambda) grid.
    #[command(args_override_self = true)]
    Gridsearch(GridArgs),
    /// Write a synthetic benchmark dataset as CSV.
    #[command(args_override_self = true)]
    Datagen(DatagenArgs),
    /// Score predicted labels against ground truth.
    #[command(args_override_self = true)]
    Metrics(MetricsArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset CSV; omit to use a synthetic family.
    #[arg(long, value_name = "CSV", conflicts_with = "family")]
    pub data: Option<PathBuf>,
    /// Whether the CSV starts with a header row.
    #[arg(long, action = ArgAction::Set, default_value_t = true, num_args = 0..=1, default_missing_value = "true")]
    pub header: bool,
    /// Label column, by header name or zero-based index.
    #[arg(long)]
    pub label_col: Option<String>,
    /// Synthetic family (s1, s2, s3, toy, scene3d).
    #[arg(long)]
    pub family: Option<Family>,
    /// Synthetic noise (clean, gaussian, laplace, student_t1, uniform_outliers).
    #[arg(long, default_value = "clean")]
    pub noise: Noise,
    #[arg(long)]
    pub noise_scale: Option<f64>,
    #[arg(long)]
    pub outlier_fraction: Option<f64>,
    /// Comma-separated points per cluster.
    #[arg(long, value_delimiter = ',')]
    pub n_per_cluster: Option<Vec<usize>>,
    /// Seed of the synthetic dataset (restarts use --seed).
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, default_value = "rflkpc")]
    pub method: String,
    /// Number of clusters; defaults to the label count or the family size.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    pub m: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub eta: f64,
    #[arg(long, default_value_t = 100)]
    pub max_outer: usize,
    #[arg(long, default_value_t = 20)]
    pub max_inner: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub inner_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub eps_proj: f64,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// json or csv.
    #[arg(long, default_value = "json")]
    pub format: String,
    /// Zero timing fields so repeated runs are byte-identical.
    #[arg(long, action = ArgAction::Set, default_value_t = false, num_args = 0..=1, default_missing_value = "true")]
    pub strip_timing: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value_t = 100)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Min-max scale every feature to [0, 1] before fitting.
    #[arg(long, action = ArgAction::Set, default_value_t = false, num_args = 0..=1, default_missing_value = "true")]
    pub normalize: bool,
    /// FCRM response column (name or index); defaults to the last feature.
    #[arg(long)]
    pub response_col: Option<String>,
    /// Score outliers (label -1) as their own class.
    #[arg(long, action = ArgAction::Set, default_value_t = false, num_args = 0..=1, default_missing_value = "true")]
    pub score_outliers: bool,
    /// NMI normalization: geometric or arithmetic.
    #[arg(long, default_value = "geometric")]
    pub nmi: String,
    /// Worker threads (default: $PLANECLUST_THREADS, then all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1"
    )]
    pub alpha_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.0001,0.001,0.01,0.1,1")]
    pub lambda_grid: Vec<f64>,
    /// best_metric (mean ACC) or best_objective.
    #[arg(long, default_value = "best_metric")]
    pub selection: String,
}

#[derive(Debug, Args)]
pub struct DatagenArgs {
    #[arg(long)]
    pub family: Family,
    #[arg(long, default_value = "clean")]
    pub noise: Noise,
    #[arg(long)]
    pub noise_scale: Option<f64>,
    #[arg(long)]
    pub outlier_fraction: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub n_per_cluster: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// CSV holding a truth and a prediction column.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, action = ArgAction::Set, default_value_t = true, num_args = 0..=1, default_missing_value = "true")]
    pub header: bool,
    #[arg(long, default_value = "0")]
    pub truth_col: String,
    #[arg(long, default_value = "1")]
    pub pred_col: String,
    #[arg(long, default_value = "geometric")]
    pub nmi: String,
    /// Keep rows whose truth label is negative.
    #[arg(long, action = ArgAction::Set, default_value_t = false, num_args = 0..=1, default_missing_value = "true")]
    pub score_outliers: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    pub format: String,
}
