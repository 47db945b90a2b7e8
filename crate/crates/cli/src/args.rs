use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "stdf", version, about = "Estimate stable tail dependence functions, fit models and run simulation studies")]
pub struct Cli {
    /// Number of worker threads. Results do not depend on it.
    #[arg(long, global = true, env = "STDF_THREADS")]
    pub threads: Option<usize>,

    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a sample from a model.
    Simulate(SimulateArgs),
    /// Replace each column by its ranks.
    Ranks(RanksArgs),
    /// Evaluate stdf or tail copula estimators on a grid.
    Estimate(EstimateArgs),
    /// Weighted least squares fit of a parametric stdf family.
    Fit(FitArgs),
    /// Bootstrap covariance of the lower tail copula process.
    Bootstrap(BootstrapArgs),
    /// Run a Monte Carlo study.
    Study(StudyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelKind {
    Logistic,
    MaxLinear,
    BrownResnick,
    Clayton,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Header {
    Auto,
    Yes,
    No,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EstimatorChoice {
    Empirical,
    Beta,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Target {
    Stdf,
    LowerTail,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Family {
    Logistic,
    BrownResnick,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    Beta,
    Multiplier,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PresetArg {
    Paper,
    Desk,
}

/// Options shared by commands that read a data file.
#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input CSV, one observation per row.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Whether the first row is a header.
    #[arg(long, value_enum, default_value = "auto")]
    pub header: Header,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,

    /// Logistic or Clayton parameter; for max-linear, a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    pub theta: Vec<f64>,

    /// Brown–Resnick range.
    #[arg(long)]
    pub rho: Option<f64>,

    /// Brown–Resnick smoothness.
    #[arg(long)]
    pub alpha: Option<f64>,

    #[arg(long)]
    pub n: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub out: PathBuf,

    /// Rerun from a manifest or config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RanksArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Break ties with tiny seeded noise instead of failing.
    #[arg(long)]
    pub jitter_seed: Option<u64>,

    #[arg(long)]
    pub out: PathBuf,

    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long)]
    pub k: Option<f64>,

    #[arg(long, value_enum, default_value = "both")]
    pub estimator: EstimatorChoice,

    /// Rank-threshold offset of the empirical stdf (0, 0.5 or 1).
    #[arg(long, default_value_t = 0.5)]
    pub offset: f64,

    #[arg(long, value_enum, default_value = "stdf")]
    pub target: Target,

    /// CSV of evaluation points.
    #[arg(long)]
    pub grid: Option<PathBuf>,

    #[arg(long)]
    pub out: PathBuf,

    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long)]
    pub k: Option<f64>,

    #[arg(long, value_enum, default_value = "logistic")]
    pub family: Family,

    /// Pilot estimator.
    #[arg(long, value_enum, default_value = "beta")]
    pub estimator: EstimatorChoice,

    #[arg(long, default_value_t = 0.5)]
    pub offset: f64,

    /// CSV of fit points; the family's standard points when absent.
    #[arg(long)]
    pub points: Option<PathBuf>,

    /// CSV of the q x q weight matrix; identity when absent.
    #[arg(long)]
    pub weights: Option<PathBuf>,

    /// Output JSON.
    #[arg(long)]
    pub out: PathBuf,

    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, value_enum, default_value = "beta")]
    pub method: Method,

    #[arg(long)]
    pub k: Option<f64>,

    /// CSV of bivariate points; (cos(m pi/8), sin(m pi/8)), m = 1..3 when absent.
    #[arg(long)]
    pub points: Option<PathBuf>,

    /// Number of bootstrap replications.
    #[arg(long, short = 'B')]
    pub replications: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Output file; JSON if it ends in `.json`, CSV otherwise.
    #[arg(long)]
    pub out: PathBuf,

    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// Study config or manifest JSON.
    #[arg(long, conflicts_with = "design")]
    pub config: Option<PathBuf>,

    /// Built-in design: fig1-logistic, fig1-max-linear, fig1-brown-resnick,
    /// fig2-logistic, fig2-brown-resnick or table1.
    #[arg(long)]
    pub design: Option<String>,

    /// Replication counts of a published scale.
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,

    /// Override the config seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, required_unless_present = "print_config")]
    pub out: Option<PathBuf>,

    /// Print the resolved config as JSON and exit.
    #[arg(long)]
    pub print_config: bool,

    /// Directory of cached Brown–Resnick truth tables [default: <out>/oracle].
    #[arg(long)]
    pub oracle_cache: Option<PathBuf>,

    /// Compute the truth table if it is not cached yet.
    #[arg(long)]
    pub precompute_oracle: bool,
}
