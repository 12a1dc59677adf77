use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lablab::NumericMode;

#[derive(Debug, Parser)]
#[command(name = "lablab", version, about = "Simulation and numerical analysis of list betting systems")]
pub struct Cli {
    /// INI file with one section per subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, global = true)]
    pub numeric: Option<NumericMode>,
    /// Master seed; overrides LABLAB_SEED and the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a batch of episodes and write episodes.csv.
    Simulate(SimulateArgs),
    /// Survival, truncated-moment and Doob checks on episodes.csv.
    Tail(TailArgs),
    /// Exact stopping-time law and its asymptotic envelope.
    Stopping(StoppingArgs),
    /// Least fixed points of the value recursion over several depths.
    Bellman(BellmanArgs),
    /// Summarise the JSON outputs found in a directory.
    Report(ReportArgs),
}

// Every flag below overrides the config key of the same name.

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long)]
    pub list: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub episodes: Option<String>,
    #[arg(long)]
    pub cutoff: Option<String>,
    #[arg(long)]
    pub constraints: Option<String>,
    #[arg(long)]
    pub fraction: Option<String>,
}

#[derive(Debug, Args)]
pub struct TailArgs {
    /// Defaults to episodes.csv in the output directory.
    #[arg(long)]
    pub episodes: Option<String>,
    /// `log:lo:hi:points` or a comma separated list.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long)]
    pub t0: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
}

#[derive(Debug, Args)]
pub struct StoppingArgs {
    #[arg(long)]
    pub l0: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub n_max: Option<String>,
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long)]
    pub mc_episodes: Option<String>,
}

#[derive(Debug, Args)]
pub struct BellmanArgs {
    /// `sqrt` (alias `lemma5`), `unconstrained`, or `const:EPS`.
    #[arg(long)]
    pub caps: Option<String>,
    /// Comma separated truncation depths.
    #[arg(long)]
    pub l_max: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub boundary: Option<String>,
    #[arg(long)]
    pub max_iter: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory to summarise; defaults to --out.
    pub dir: Option<PathBuf>,
}
