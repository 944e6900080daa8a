use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sparse_softmax::analysis::LOG_2;

#[derive(Debug, Parser)]
#[command(
    name = "sparse-softmax",
    version,
    about = "Softmax vs. top-k sparse-softmax experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one classifier and write its per-epoch loss curve.
    Train(TrainArgs),
    /// Train a softmax baseline and one sparse run per k.
    SweepK(SweepArgs),
    /// Check the logit-spread bound on random and near-boundary logits.
    VerifyBound(VerifyArgs),
    /// Compare analytic loss gradients with central finite differences.
    GradCheck(GradCheckArgs),
    /// Write a synthetic dataset snapshot.
    GenData(GenDataArgs),
    /// Repeat a run from its manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Softmax,
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long, default_value_t = 150)]
    pub n_classes: usize,
    #[arg(long, default_value_t = 64)]
    pub feature_dim: usize,
    #[arg(long, default_value_t = 40)]
    pub samples_per_class: usize,
    /// Standard deviation of the per-sample Gaussian noise.
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    pub optimizer: OptimizerArg,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Seeds data generation, initialization and shuffling.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Substitute the target into the top-k set when it falls outside.
    #[arg(long)]
    pub force_include_target: bool,
    /// Exit nonzero when a run's training loss becomes non-finite.
    #[arg(long)]
    pub fail_on_divergence: bool,
    /// Hidden width of a one-hidden-layer model; 0 trains a linear model.
    #[arg(long, default_value_t = 0)]
    pub hidden: usize,
    /// Write 0 instead of elapsed seconds in the wall_time_s column.
    #[arg(long)]
    pub no_timing: bool,
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value_t = LossArg::Softmax)]
    pub loss: LossArg,
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Comma-separated k values.
    #[arg(long, value_delimiter = ',', default_value = "1,10,20,50,100")]
    pub k: Vec<usize>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 101)]
    pub n: usize,
    /// Loss ceiling in nats.
    #[arg(long, default_value_t = LOG_2)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GradCheckArgs {
    #[arg(long, default_value_t = 50)]
    pub dim: usize,
    /// Fixed k; drawn uniformly from 1..=dim per trial when omitted.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 3)]
    pub seed: u64,
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GenDataArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value = "dataset.txt")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output location; defaults to the one recorded in the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
