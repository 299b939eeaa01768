use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use curvekit_core::nn::RegularizerMode;
use curvekit_core::Regime;

#[derive(Parser, Debug)]
#[command(name = "curvekit", version, about = "Yield-curve estimation for sparse bond markets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic market snapshot (or a daily series with --days).
    Generate(GenerateArgs),
    /// Fit one estimator to a snapshot and write the model and curve samples.
    Fit(FitArgs),
    /// Run one of the evaluation protocols.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RegimeArg {
    Flat,
    Rising,
    Falling,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Flat => Regime::Flat,
            RegimeArg::Rising => Regime::Rising,
            RegimeArg::Falling => Regime::Falling,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RegularizerArg {
    PerBond,
    PerEpoch,
}

impl From<RegularizerArg> for RegularizerMode {
    fn from(r: RegularizerArg) -> Self {
        match r {
            RegularizerArg::PerBond => RegularizerMode::PerBond,
            RegularizerArg::PerEpoch => RegularizerMode::PerEpoch,
        }
    }
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "flat")]
    pub regime: RegimeArg,
    #[arg(long, default_value_t = 60)]
    pub bonds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub min_maturity: f64,
    #[arg(long, default_value_t = 15.0)]
    pub max_maturity: f64,
    #[arg(long, default_value_t = 0.01)]
    pub min_coupon: f64,
    #[arg(long, default_value_t = 0.05)]
    pub max_coupon: f64,
    /// Spread of the bond curve over the benchmark (decimal).
    #[arg(long, default_value_t = 0.005)]
    pub spread: f64,
    /// Standard deviation of the multiplicative price noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Benchmark level (decimal).
    #[arg(long, default_value_t = 0.03)]
    pub level: f64,
    /// Write this many consecutive days into the output directory.
    #[arg(long)]
    pub days: Option<usize>,
    /// Daily standard deviation of the benchmark level for --days.
    #[arg(long, default_value_t = 0.0005)]
    pub drift: f64,
    /// Output file, or directory when --days is given.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Defaults to the output file extension, else json.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Estimator settings shared by `fit` and the experiments. Flags override
/// the config file, which overrides built-in defaults.
#[derive(Args, Debug, Default, Clone)]
pub struct ModelArgs {
    /// JSON file with `estimator`, `grid`, `nss`, `kr` and `nn` sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comparison grid in years, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long)]
    pub nss_iterations: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub kernel_a: Option<f64>,
    #[arg(long)]
    pub kernel_b: Option<f64>,
    #[command(flatten)]
    pub nn: NnArgs,
}

#[derive(Args, Debug, Default, Clone)]
pub struct NnArgs {
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub gamma1: Option<f64>,
    #[arg(long)]
    pub gamma2: Option<f64>,
    #[command(flatten)]
    pub shape: NnShapeArgs,
}

#[derive(Args, Debug, Default, Clone)]
pub struct NnShapeArgs {
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub init_scale: Option<f64>,
    #[arg(long, value_enum)]
    pub regularizer: Option<RegularizerArg>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    pub snapshot: PathBuf,
    /// bootstrap, nss, kr or nn; falls back to the config file, then kr.
    #[arg(long)]
    pub estimator: Option<String>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Directory for the outputs (defaults to the snapshot's directory).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Format of the curve sample files.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Subcommand, Debug)]
pub enum ExperimentCommand {
    /// Bump one bond's price and compare refits with the base fit.
    Perturb(PerturbArgs),
    /// Drop random bonds and compare refits with the all-bonds fit.
    Drop(DropArgs),
    /// Day-over-day curve movement over a series of snapshots.
    Stability(StabilityArgs),
    /// Leave-one-out yield error by maturity bucket.
    Loo(LooArgs),
    /// Network learning rate / epochs / penalty sweep.
    Hyperscan(HyperscanArgs),
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Report file.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Defaults to the output file extension, else json.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug)]
pub struct EstimatorsArgs {
    /// Comma-separated estimator names.
    #[arg(long, value_delimiter = ',', default_value = "bootstrap,nss,kr,nn")]
    pub estimators: Vec<String>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Args, Debug)]
pub struct PerturbArgs {
    pub snapshot: PathBuf,
    /// Bond to bump; defaults to the longest maturity.
    #[arg(long)]
    pub bond: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "0.03,0.05,0.10")]
    pub bumps: Vec<f64>,
    #[command(flatten)]
    pub estimators: EstimatorsArgs,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Args, Debug)]
pub struct DropArgs {
    pub snapshot: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    pub counts: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub mc: usize,
    #[command(flatten)]
    pub estimators: EstimatorsArgs,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Args, Debug)]
pub struct StabilityArgs {
    /// Date-ordered snapshot files, or one directory of them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Hit-rate threshold (decimal).
    #[arg(long, default_value_t = 0.0010)]
    pub threshold: f64,
    #[command(flatten)]
    pub estimators: EstimatorsArgs,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Args, Debug)]
pub struct LooArgs {
    pub snapshot: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub mc: usize,
    /// Restrict held-out bonds to one bucket: <2Y, 2Y-10Y, >10Y or Full.
    #[arg(long)]
    pub bucket: Option<String>,
    #[command(flatten)]
    pub estimators: EstimatorsArgs,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Args, Debug)]
pub struct HyperscanArgs {
    pub snapshot: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1e-7,1e-8,1e-9")]
    pub lr: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "200,500,1000")]
    pub epochs: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1e3")]
    pub gamma1: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1e4")]
    pub gamma2: Vec<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub shape: NnShapeArgs,
    #[command(flatten)]
    pub report: ReportArgs,
}
