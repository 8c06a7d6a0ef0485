use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use delreg_core::simulation::TableId;
use delreg_core::KappaMethod;

#[derive(Debug, Parser)]
#[command(
    name = "delreg",
    version,
    about = "Complete-case versus available-case least squares under MCAR missingness"
)]
pub struct Cli {
    /// Write results here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate regression coefficients.
    Fit(FitArgs),
    /// Asymptotic variances of both estimators and their difference.
    Variance(VarianceArgs),
    /// Recommend an estimator (JSON).
    Advise(ModelArgs),
    /// Monte Carlo variances for one of the numbered settings.
    Simulate(SimulateArgs),
    /// Rebuild a reference table.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodChoice {
    Cc,
    Ac,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PatternChoice {
    A,
    B,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KappaChoice {
    Value(f64),
    Estimate(KappaMethod),
}

fn parse_kappa(s: &str) -> Result<KappaChoice, String> {
    if let Ok(m) = s.parse::<KappaMethod>() {
        if s.starts_with("estimate-") {
            return Ok(KappaChoice::Estimate(m));
        }
    }
    s.parse::<f64>()
        .map(KappaChoice::Value)
        .map_err(|_| format!("expected a number, estimate-marginal or estimate-mardia, got {s:?}"))
}

fn parse_table(s: &str) -> Result<TableId, String> {
    s.parse().map_err(|e: delreg_core::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub response: String,
    #[arg(long, value_enum, default_value = "both")]
    pub method: MethodChoice,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args, Clone)]
pub struct PatternArgs {
    /// Missing pattern. Without it the proportions are read off the data.
    #[arg(long, value_enum)]
    pub pattern: Option<PatternChoice>,
    /// Proportion of rows observing the target predictor.
    #[arg(long)]
    pub q1: Option<f64>,
    /// Proportion of rows observing each remaining predictor.
    #[arg(long = "q-rest")]
    pub q_rest: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Data file. Σ is estimated from it.
    #[arg(long, required_unless_present = "covariance", conflicts_with = "covariance")]
    pub input: Option<PathBuf>,
    /// Covariance matrix file (header row, then a square matrix).
    #[arg(long)]
    pub covariance: Option<PathBuf>,
    #[arg(long)]
    pub response: String,
    /// Coefficient of interest; defaults to the first predictor.
    #[arg(long)]
    pub target: Option<String>,
    #[command(flatten)]
    pub pattern: PatternArgs,
    #[arg(long, value_parser = parse_kappa, default_value = "0")]
    pub kappa: KappaChoice,
    /// Sample size. Defaults to the row count of --input.
    #[arg(long)]
    pub n: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VarianceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Numbered data-generating setting (1 normal, 2 t5, 3 Bernoulli, 4-5 Poisson).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=5))]
    pub setting: u8,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[command(flatten)]
    pub pattern: PatternArgs,
    #[arg(long, default_value_t = 10_000)]
    pub inner: usize,
    #[arg(long, default_value_t = 100)]
    pub outer: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long, value_parser = parse_table)]
    pub table: TableId,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub inner: usize,
    #[arg(long, default_value_t = 100)]
    pub outer: usize,
    /// Skip the Monte Carlo columns.
    #[arg(long)]
    pub theory_only: bool,
    /// Print variances ×10³ with four decimals.
    #[arg(long)]
    pub paper_units: bool,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}
