use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "ppmrx",
    version,
    about = "Error probabilities of coherent-state PPM receivers"
)]
pub struct Cli {
    /// Worker threads; all cores when unset.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// TOML file with parameter defaults. Flags override file values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Click probabilities q, p and their complements on a displacement grid.
    Stats(StatsArgs),
    /// Helstrom, DD, CPN, optimized CPN and the greedy strong-pulse limit.
    Bounds(BoundsArgs),
    /// Greedy receiver error by exact decision-tree enumeration.
    Exact(ExactArgs),
    /// Optimal adaptive receiver by backward induction.
    Optimal(OptimalArgs),
    /// Monte Carlo estimate for one receiver at one operating point.
    Simulate(SimulateArgs),
    /// Receiver comparison over a photon-number grid.
    Sweep(SweepArgs),
    /// Greedy policy tables.
    #[command(subcommand)]
    Lut(LutCommand),
    /// Scaling fits and decibel gaps over sweep output.
    Fit(FitArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ChannelArgs {
    /// PPM order.
    #[arg(long)]
    pub m: Option<usize>,
    /// Mean signal photon number n = alpha^2.
    #[arg(long, conflicts_with = "alpha")]
    pub n: Option<f64>,
    /// Pulse amplitude.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Mean background photon number per slot.
    #[arg(long)]
    pub nb: Option<f64>,
    /// Mode mismatch.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub n_min: Option<f64>,
    #[arg(long)]
    pub n_max: Option<f64>,
    /// Number of log-spaced photon numbers.
    #[arg(long)]
    pub n_points: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Output file; standard output when unset.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, default_value_t = 0.0)]
    pub beta_min: f64,
    /// Defaults to alpha + 5.
    #[arg(long)]
    pub beta_max: Option<f64>,
    #[arg(long, default_value_t = 11)]
    pub beta_points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// CPN displacement; alpha when unset.
    #[arg(long)]
    pub beta: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Initial displacement; optimized when unset.
    #[arg(long)]
    pub beta_in: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OptimalArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Ratio grid size of the backward induction.
    #[arg(long)]
    pub dp_points: Option<usize>,
    /// Also optimize the full decision tree (M <= 3).
    #[arg(long)]
    pub brute: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimReceiver {
    Dd,
    Cpn,
    CpnOpt,
    Greedy,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, value_enum, default_value_t = SimReceiver::Greedy)]
    pub receiver: SimReceiver,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CPN displacement; alpha when unset.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Greedy initial displacement; optimized when unset.
    #[arg(long)]
    pub beta_in: Option<f64>,
    /// Greedy policy table: a file written by `lut build`, or `auto`.
    #[arg(long, default_value = "auto")]
    pub lut: String,
    /// Ratio grid size when the table is built on the fly.
    #[arg(long)]
    pub lut_points: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// fig3a, fig3b, fig4a, fig4b or fig5.
    #[arg(long)]
    pub preset: Option<String>,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Comma-separated receivers, e.g. dd,cpn_opt,greedy.
    #[arg(long, value_delimiter = ',')]
    pub receivers: Option<Vec<String>>,
    /// auto, exact or mc.
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub beta_in: Option<f64>,
    #[arg(long)]
    pub lut_points: Option<usize>,
    #[arg(long)]
    pub dp_points: Option<usize>,
    /// Write one row per operating point and one column per receiver.
    #[arg(long)]
    pub pivot: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Subcommand)]
pub enum LutCommand {
    /// Tabulate greedy choices over a log-spaced ratio grid.
    Build(LutBuildArgs),
    /// Look up ratios in a table.
    Query(LutQueryArgs),
}

#[derive(Debug, Args)]
pub struct LutBuildArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub r_min: Option<f64>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LutQueryArgs {
    /// Table file written by `lut build`.
    #[arg(long)]
    pub lut: PathBuf,
    /// Ratios to look up.
    #[arg(long, value_delimiter = ',', required = true)]
    pub r: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitModeArg {
    PhotonStarved,
    StrongPulse,
    DbGap,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Sweep output (CSV or JSON lines); `-` reads standard input.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub mode: FitModeArg,
    #[arg(long)]
    pub n_min: Option<f64>,
    #[arg(long)]
    pub n_max: Option<f64>,
    /// Reference receiver of the dB-gap report.
    #[arg(long, default_value = "helstrom")]
    pub reference: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
