use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "ebpred",
    version,
    about = "Empirical-Bayes prediction for sparse high-dimensional linear regression"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Run the configuration sampler and summarize the chain.
    #[command(args_override_self = true)]
    Fit(FitArgs),
    /// Posterior-predictive draws and prediction intervals at new covariate rows.
    #[command(args_override_self = true)]
    Predict(PredictArgs),
    /// Replicated simulation on AR(1) designs, or the single-dataset density diagnostic.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Exact posterior over all configurations (small p only).
    #[command(args_override_self = true)]
    Enumerate(EnumerateArgs),
    /// Out-of-sample MSPE over repeated random train/test splits.
    #[command(args_override_self = true)]
    BenchSplits(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// key=value file of flag values; flags given on the command line win
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads for replication-level parallelism
    #[arg(long, env = "EBPRED_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Likelihood fraction
    #[arg(long, default_value_t = 0.99)]
    pub alpha: f64,
    /// Prior precision multiplier
    #[arg(long, default_value_t = 0.005)]
    pub gamma: f64,
    /// Complexity prior exponent
    #[arg(long, default_value_t = 0.05)]
    pub a: f64,
    /// Complexity prior constant
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Largest model size [default: numerical rank of X]
    #[arg(long = "R")]
    pub max_size: Option<usize>,
    /// Known error variance; without it σ² gets an inverse-gamma prior
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub ig_a0: f64,
    #[arg(long, default_value_t = 4.0)]
    pub ig_b0: f64,
    /// Allow alpha + gamma > 1
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    /// Total sampler steps, burn-in included
    #[arg(long, default_value_t = 20_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 5_000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct PredictiveArgs {
    /// Monte Carlo draws per query point
    #[arg(long, default_value_t = 10_000)]
    pub m: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Design matrix CSV (n rows, p columns)
    #[arg(long, value_name = "FILE")]
    pub x: Option<PathBuf>,
    /// Response CSV (one column)
    #[arg(long, value_name = "FILE")]
    pub y: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// States listed in the chain summary
    #[arg(long, default_value_t = 20)]
    pub top: usize,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Query rows CSV (one row per query point)
    #[arg(long, value_name = "FILE")]
    pub xnew: Option<PathBuf>,
    /// One-column CSV of existing predictive draws; skips fitting and only
    /// computes the interval
    #[arg(long, value_name = "FILE")]
    pub draws: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub predictive: PredictiveArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 125)]
    pub p: usize,
    /// Signal magnitude
    #[arg(long = "A", default_value_t = 2.0)]
    pub signal: f64,
    /// AR(1) correlation between neighbouring covariates
    #[arg(long = "r", default_value_t = 0.2)]
    pub rho: f64,
    #[arg(long, default_value_t = 250)]
    pub reps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    /// Fresh test points per replication
    #[arg(long, default_value_t = 1)]
    pub test_batch: usize,
    /// Comma-separated signal indices [default: 2,3,14,21,24]
    #[arg(long, value_delimiter = ',')]
    pub signal_positions: Option<Vec<usize>>,
    /// Read --signal-positions as 1-based
    #[arg(long)]
    pub one_based: bool,
    /// Single dataset: compare predictive draws with the oracle law and
    /// write plot-ready density data
    #[arg(long)]
    pub figure1: bool,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub predictive: PredictiveArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EnumerateArgs {
    /// Design CSV [default: bundled 8x5 toy data]
    #[arg(long, value_name = "FILE")]
    pub x: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub y: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Data CSV; with --y-col the response is taken from this file
    #[arg(long, value_name = "FILE")]
    pub x: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub y: Option<PathBuf>,
    /// 0-based column of --x holding the response; the other columns are covariates
    #[arg(long)]
    pub y_col: Option<usize>,
    #[arg(long, default_value_t = 0.75)]
    pub train_frac: f64,
    #[arg(long, default_value_t = 20)]
    pub splits: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub predictive: PredictiveArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

impl Cmd {
    pub fn run_args(&self) -> &RunArgs {
        match self {
            Cmd::Fit(a) => &a.run,
            Cmd::Predict(a) => &a.run,
            Cmd::Simulate(a) => &a.run,
            Cmd::Enumerate(a) => &a.run,
            Cmd::BenchSplits(a) => &a.run,
        }
    }

    /// Input files as (flag, path) pairs, hashed into the manifest.
    pub fn inputs(&self) -> Vec<(&'static str, &PathBuf)> {
        let named: Vec<(&'static str, &Option<PathBuf>)> = match self {
            Cmd::Fit(a) => vec![("x", &a.data.x), ("y", &a.data.y)],
            Cmd::Predict(a) => vec![
                ("x", &a.data.x),
                ("y", &a.data.y),
                ("xnew", &a.xnew),
                ("draws", &a.draws),
            ],
            Cmd::Simulate(_) => vec![],
            Cmd::Enumerate(a) => vec![("x", &a.x), ("y", &a.y)],
            Cmd::BenchSplits(a) => vec![("x", &a.x), ("y", &a.y)],
        };
        named
            .into_iter()
            .filter_map(|(k, p)| p.as_ref().map(|p| (k, p)))
            .collect()
    }
}
