//! `advrisk` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 bad arguments,
//! 3 unreadable data, 4 LP failure, 5 enumeration cap reached,
//! 6 internal consistency failure.

mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "advrisk", version, about = "Lower bounds on the minimal adversarial risk of multiclass classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic (or CIFAR-100 subset) dataset as CSV.
    GenData(GenDataArgs),
    /// Exhaustive enumeration + LP over a budget grid.
    Exhaustive(ExhaustiveArgs),
    /// Genetic search + LP over a budget grid.
    Genetic(GeneticArgs),
    /// Genetic column generation for the W2-penalized problem over a τ grid.
    GencolW2(GencolArgs),
    /// Run a search, then check its dual against every feasible configuration.
    Certify(CertifyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SyntheticArgs {
    /// Number of classes (synthetic) or classes kept (CIFAR).
    #[arg(long)]
    pub classes: Option<usize>,
    /// Number of synthetic points.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Side of the square synthetic class centers are drawn from.
    #[arg(long, default_value_t = 5.0)]
    pub center_box: f64,
    /// Standard deviation of synthetic clusters.
    #[arg(long, default_value_t = 0.7)]
    pub sigma: f64,
}

#[derive(Args, Debug, Clone)]
#[group(id = "source", required = true, multiple = false)]
pub struct SourceArgs {
    /// CSV file with feature columns and a final label column.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// CIFAR-100 binary test file; use with --classes.
    #[arg(long)]
    pub cifar: Option<PathBuf>,
    /// Generate the synthetic dataset in memory.
    #[arg(long)]
    pub synthetic: bool,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub synthetic: SyntheticArgs,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path prefix.
    #[arg(long)]
    pub out: PathBuf,
    /// Run grid points concurrently (each owns its pool and LP).
    #[arg(long)]
    pub parallel_grid: bool,
}

#[derive(Args, Debug, Clone)]
pub struct SearchArgs {
    /// Offspring per generation [default: 2N, or N for gencol-w2].
    #[arg(long)]
    pub samples: Option<usize>,
    /// Weights of the add:swap:drop rules.
    #[arg(long, default_value = "1:1:0", value_parser = run::parse_weights)]
    pub rule_weights: [f64; 3],
    /// Wall-clock limit per grid point, in seconds.
    #[arg(long, default_value_t = 300.0)]
    pub time_limit: f64,
    /// Generations without insertions before stopping.
    #[arg(long, default_value_t = 50)]
    pub stagnation: usize,
}

#[derive(Args, Debug)]
pub struct GenDataArgs {
    #[command(flatten)]
    pub synthetic: SyntheticArgs,
    /// Export this CIFAR-100 file (with --classes) instead of generating.
    #[arg(long)]
    pub cifar: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Destination CSV file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ExhaustiveArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "l2")]
    pub metric: run::MetricArg,
    /// Comma-separated budgets.
    #[arg(long, required = true, value_delimiter = ',')]
    pub eps: Vec<f64>,
    /// Abort once the pool would exceed this many configurations.
    #[arg(long)]
    pub max_configs: Option<usize>,
    /// Also write each pool as JSON.
    #[arg(long)]
    pub export_pool: bool,
    /// Also write each reduced LP in LP text format.
    #[arg(long)]
    pub export_lp: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct GeneticArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "l2")]
    pub metric: run::MetricArg,
    /// Comma-separated budgets.
    #[arg(long, required = true, value_delimiter = ',')]
    pub eps: Vec<f64>,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Stop after this many proposals.
    #[arg(long)]
    pub max_proposals: Option<u64>,
    #[arg(long)]
    pub export_pool: bool,
    #[arg(long)]
    pub export_lp: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct GencolArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated regularization strengths.
    #[arg(long, required = true, value_delimiter = ',')]
    pub tau: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub beta: usize,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub export_pool: bool,
    #[arg(long)]
    pub export_lp: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
#[group(id = "grid", required = true, multiple = false, args = ["eps", "tau"])]
pub struct CertifyArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "l2")]
    pub metric: run::MetricArg,
    /// Budgets: certify genetic search solutions.
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    /// Strengths: certify gencol-w2 solutions.
    #[arg(long, value_delimiter = ',')]
    pub tau: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub beta: usize,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Refuse datasets with more feasible configurations than this.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_configs: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::configure_threads().and_then(|()| run::execute(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("advrisk: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
