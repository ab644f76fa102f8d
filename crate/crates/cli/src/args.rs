use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(name = "extremal-sv", version, about = "Tail dependence of stochastic volatility models")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Worker threads (0 = all cores). EXTREMAL_SV_THREADS overrides it.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Output format (default: json for `construct`, csv otherwise).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Leave the timestamp out of the provenance header.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeriesArg {
    Sigma,
    X,
    AbsX,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a two-row tail program.
    LpSolve(LpSolveArgs),
    /// Tail dependence coefficients of a model.
    Eta(EtaArgs),
    /// Coefficients realizing a target profile.
    Construct(ConstructArgs),
    /// Limit measure of a lag pair.
    Measure(MeasureArgs),
    /// Simulate sample paths.
    Simulate(SimulateArgs),
    /// Tail estimators on a simulated batch.
    Estimate(EstimateArgs),
    /// Theory-versus-simulation battery.
    Verify(VerifyArgs),
    /// The cone functional of a matrix.
    Tau(TauArgs),
}

#[derive(Debug, Args)]
pub struct LpSolveArgs {
    /// JSON file `{"a": [..], "b": [..]}`.
    #[arg(long, conflicts_with_all = ["a", "b"])]
    pub lp: Option<PathBuf>,
    /// First row, comma separated.
    #[arg(long, requires = "b")]
    pub a: Option<String>,
    /// Second row, comma separated.
    #[arg(long, requires = "a")]
    pub b: Option<String>,
}

#[derive(Debug, Args)]
pub struct EtaArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Lags: `a..b` (inclusive) or a comma list.
    #[arg(long, default_value = "1")]
    pub lags: String,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    /// Target profile `η_1,..,η_m`.
    #[arg(long)]
    pub eta: String,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub h: usize,
    /// Scalings of the leading coordinate, comma separated.
    #[arg(long, default_value = "1,2,4")]
    pub s0: String,
    /// Scalings of the lagged coordinate, comma separated.
    #[arg(long, default_value = "1,2,4")]
    pub sh: String,
    /// Monte Carlo samples for constants without a closed form.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    /// Limit for the return pair instead of the volatility pair.
    #[arg(long)]
    pub returns: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Path length.
    #[arg(long = "T", value_name = "T")]
    pub t: usize,
    /// Replications.
    #[arg(long = "R", value_name = "R", default_value_t = 1)]
    pub r: usize,
    /// Moving-average terms (default: the stored coefficient list).
    #[arg(long = "L", value_name = "L")]
    pub l: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// CSV written by `simulate`.
    #[arg(long)]
    pub batch: PathBuf,
    #[arg(long, value_enum, default_value = "sigma")]
    pub series: SeriesArg,
    /// Lags: `a..b` (inclusive) or a comma list.
    #[arg(long, default_value = "1")]
    pub h: String,
    /// Order statistics for the Hill estimators (default ⌊2√N⌋).
    #[arg(long)]
    pub k: Option<usize>,
    /// Threshold quantile for ratios and the extremal index.
    #[arg(long, default_value_t = 0.999)]
    pub u: f64,
    /// Block length of the extremal index.
    #[arg(long, default_value_t = 100)]
    pub block: usize,
    #[arg(long, default_value_t = 2.0)]
    pub s0: f64,
    #[arg(long, default_value_t = 2.0)]
    pub sh: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Fraction of the full Monte Carlo sizes.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Run only these checks (comma list of ids).
    #[arg(long)]
    pub only: Option<String>,
}

#[derive(Debug, Args)]
pub struct TauArgs {
    /// Matrix as JSON rows, e.g. `[[2,0],[0,3]]`.
    #[arg(long)]
    pub matrix: String,
    /// Also run the grid oracle at this resolution (d ≤ 3).
    #[arg(long)]
    pub oracle: Option<usize>,
}
