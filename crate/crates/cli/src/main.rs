//! `lpgnet`: generate graphs, train and query models, attack them and run
//! seeded experiments.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lpgnet::attacks::{AttackKind, DegreeBand, PairMode};
use lpgnet::dp::{Epsilon, Setting};
use lpgnet::models::ModelKind;
use lpgnet::nn::NormalizationMode;

/// Overrides the directory that default output paths live under.
pub const OUTPUT_ROOT_VAR: &str = "LPGNET_OUTPUT_ROOT";

#[derive(Debug, Parser)]
#[command(name = "lpgnet", version, about = "Edge-private node classification and link-stealing evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Train one model and save a checkpoint with its privacy ledger.
    Train(TrainArgs),
    /// Run inference with a checkpoint and write logits and predictions.
    Infer(InferArgs),
    /// Attack a checkpoint and write per-seed AUCs.
    Attack(AttackArgs),
    /// Run an experiment config.
    Experiment(ExperimentArgs),
    /// Print graph, split and homophily statistics of a dataset.
    Stats(StatsArgs),
}

#[derive(Debug, Subcommand)]
enum GenerateKind {
    /// Two-cluster bipartite graph with weakly informative features.
    Bipartite {
        #[arg(long, default_value_t = 500)]
        n1: usize,
        #[arg(long, default_value_t = 400)]
        n2: usize,
        #[arg(long, default_value_t = 0.05)]
        p_edge: f64,
        #[arg(long, default_value_t = 0.25)]
        flip1: f64,
        #[arg(long, default_value_t = 0.625)]
        flip2: f64,
        #[command(flatten)]
        common: GenerateCommon,
    },
    /// Uniform random graph with a fixed edge count.
    ErdosRenyi {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        edges: usize,
        #[arg(long, default_value_t = 2)]
        classes: usize,
        #[arg(long, default_value_t = 2)]
        features: usize,
        #[command(flatten)]
        common: GenerateCommon,
    },
}

#[derive(Debug, Args)]
struct GenerateCommon {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory [default: <root>/data/<kind>-seed<seed>].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Dataset directory holding graph.txt, features.txt, labels.txt, split.txt.
    #[arg(long)]
    data: PathBuf,
    /// Number of classes [default: largest label + 1].
    #[arg(long)]
    num_classes: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    model: ModelKind,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "transductive")]
    setting: Setting,
    /// Total privacy budget; `inf` disables noise.
    #[arg(long, default_value = "inf")]
    eps: Epsilon,
    /// Number of degree-vector layers (stacked model only).
    #[arg(long, default_value_t = 1)]
    nl: usize,
    /// Budget share of the noisy edge count (noised-adjacency GCN only).
    #[arg(long, default_value_t = lpgnet::models::DEFAULT_EPS_R)]
    eps_r: f64,
    #[arg(long, default_value = "aug_norm_adj")]
    normalization: NormalizationMode,
    /// Master seed; the training seed is derived as in experiment seed 0.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON training config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    hidden_size: Option<usize>,
    #[arg(long)]
    hidden_layers: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Search hyperparameters without privacy first; a JSON grid file, or
    /// the default 72-point grid when given without a value.
    #[arg(long, num_args = 0..=1, default_missing_value = "")]
    grid: Option<String>,
    /// Checkpoint directory [default: <root>/runs/<model>-<setting>-eps<eps>-seed<seed>].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InferArgs {
    /// Checkpoint directory written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Output directory [default: the checkpoint directory].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AttackArgs {
    /// Checkpoint directory written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated: lpa, lpa_neg_euclidean, lpa_correlation, linkteller.
    #[arg(long, value_delimiter = ',', default_value = "lpa,linkteller")]
    attacks: Vec<AttackKind>,
    /// Number of pair-sampling seeds.
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    /// Master seed for pair sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "transductive_sampled")]
    mode: PairMode,
    /// Edges and non-edges (or subgraph nodes) per seed.
    #[arg(long, default_value_t = 500)]
    k: usize,
    #[arg(long, default_value = "all")]
    band: DegreeBand,
    #[arg(long, default_value_t = 500)]
    band_size: usize,
    #[arg(long, default_value_t = lpgnet::attacks::DEFAULT_DELTA)]
    delta: f64,
    /// Also write the scored pairs of every run.
    #[arg(long)]
    pairs: bool,
    /// Output directory [default: the checkpoint directory].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// JSON experiment config, or the name of a bundled one
    /// (`bipartite-baselines`).
    config: PathBuf,
    /// Output directory [default: <root>/experiments/<name>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cells run concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Replace the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the resolved cells and budgets without training.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[command(flatten)]
    data: DataArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
