use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "evgp",
    version,
    about = "Sparse variational GP regression with physics-derived explicit mean priors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Simulate a system and write a one-step regression dataset (CSV + JSON sidecar)
    Simulate(SimulateArgs),
    /// Fit one EVGP per target column of a dataset CSV
    Train(TrainArgs),
    /// Evaluate trained models on a held-out dataset
    Evaluate(EvaluateArgs),
    /// Run the benchmark matrix over models, training sizes and seeds
    Bench(BenchArgs),
    /// Print the learned feature weights (posterior mean and std)
    Inspect(InspectArgs),
}

/// Flags win over values from `--config`; config values win over
/// built-in defaults.
#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// JSON config file with the same keys as the flags
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// pendulum | cartpole | acrobot
    #[arg(long)]
    pub system: Option<String>,
    /// Named protocol preset: `table1`
    #[arg(long)]
    pub preset: Option<String>,
    /// Number of sampled trajectories
    #[arg(long)]
    pub trajectories: Option<usize>,
    /// Integration steps (= regression pairs) per trajectory
    #[arg(long)]
    pub steps_per_traj: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Control scale eta (controls ~ eta * N(0,1))
    #[arg(long)]
    pub eta: Option<f64>,
    /// Initial-state scales, comma separated (z0 ~ alpha * U(-1,1))
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Observation-noise std applied to every target dimension
    #[arg(long)]
    pub noise_std: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV path (sidecar written next to it)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Training dataset CSV
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// none | if | ifg
    #[arg(long)]
    pub prior: Option<String>,
    /// System override when the dataset has no sidecar
    #[arg(long)]
    pub system: Option<String>,
    /// Discretization step for the prior (sidecar value by default)
    #[arg(long)]
    pub dt: Option<f64>,
    /// Number of inducing points
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Freeze kernel/noise hyperparameters for the first k steps
    #[arg(long)]
    pub hyper_freeze: Option<usize>,
    /// Keep the inducing inputs fixed
    #[arg(long)]
    pub freeze_inducing: bool,
    /// Model file to write
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Training-report JSON to write
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write checkpoint model files every k steps
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    /// Directory for checkpoint files (default: alongside --out)
    #[arg(long)]
    pub checkpoint_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Trained model file
    #[arg(long, required_unless_present = "compare")]
    pub model: Option<PathBuf>,
    /// Two model files for a side-by-side comparison
    #[arg(long, num_args = 2, conflicts_with = "model")]
    pub compare: Option<Vec<PathBuf>>,
    /// Held-out dataset CSV
    #[arg(long)]
    pub data: PathBuf,
    /// Write the evaluation report JSON here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// pendulum | cartpole | acrobot
    #[arg(long)]
    pub system: Option<String>,
    /// desk | full
    #[arg(long)]
    pub preset: Option<String>,
    /// Models to include: vgp,evgp-if,evgp-ifg
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    /// Training sizes, comma separated
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Repeat seeds, comma separated
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub test_size: Option<usize>,
    #[arg(long)]
    pub noise_std: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Override the per-model inducing-point counts
    #[arg(long)]
    pub m: Option<usize>,
    /// Directory for results.json, table.txt and series.csv
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InspectArgs {
    /// Trained model file
    #[arg(long)]
    pub model: PathBuf,
    /// Also write the weight table as CSV
    #[arg(long)]
    pub csv: Option<PathBuf>,
}
