//! Command-line arguments.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "auditsel",
    version,
    about = "Select a representative audit sample by deviance minimization"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize additions to and removals from the audit sample.
    Plan(PlanArgs),
    /// Run `plan` over a grid of bounds and tabulate the deviances.
    Sweep(SweepArgs),
    /// Draw the units to add and remove for a plan.
    Realize(RealizeArgs),
    /// Estimate category shares and error probabilities from audited units.
    Estimate(EstimateArgs),
    /// Run the simulation study.
    Simulate(SimulateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Plan(_) => "plan",
            Command::Sweep(_) => "sweep",
            Command::Realize(_) => "realize",
            Command::Estimate(_) => "estimate",
            Command::Simulate(_) => "simulate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    /// Deviance only.
    D,
    /// Deviance plus `lambda` times the number of moved units.
    F1,
    /// Deviance plus `exp(-D / kappa)` times the number of moved units.
    F2,
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Unit-level CSV with header `unit_id,x,y,z`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Aggregated CSV with header `x,y,n0,n1`.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = ObjectiveKind::D)]
    pub objective: ObjectiveKind,
    /// Penalty weight for `--objective f1` [default: 0.01].
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Scale for `--objective f2` [default: cutoff / 10].
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Significance level of the chi-square cutoff.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Number of random starts.
    #[arg(long, default_value_t = 50)]
    pub attempts: usize,
    /// Master seed; generated and printed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlanArgs {
    #[command(flatten)]
    pub source: Source,
    /// Maximum number of units added to the audit sample.
    #[arg(long)]
    pub m_plus: u64,
    /// Maximum number of audited units removed.
    #[arg(long)]
    pub m_minus: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: Source,
    /// Comma-separated values of M+.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sweep_m_plus: Vec<u64>,
    /// Comma-separated factors; M- = factor * M+, capped at the audit size.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sweep_m_minus_factor: Vec<u64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RealizeArgs {
    /// Directory written by `plan` or `sweep`.
    #[arg(long)]
    pub plan: PathBuf,
    /// Unit-level CSV the plan was computed from.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimateArgs {
    /// Audited units, header `unit_id,w,x,y`.
    #[arg(long)]
    pub audited: PathBuf,
    /// Population shares of Y, header `y,proportion`.
    #[arg(long)]
    pub margins: PathBuf,
    /// `categories.csv` from a plan directory, to keep its X and Y indices.
    #[arg(long)]
    pub categories: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// 100 replicates and 50 attempts; 200 variance-study samples.
    Desk,
    /// 1,000 replicates and 200 attempts; 1,000 variance-study samples.
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    /// Bias and deviance reduction per condition.
    Conditions,
    /// Standard error calibration on fixed populations.
    Variance,
    All,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = Scale::Desk)]
    pub scale: Scale,
    #[arg(long, value_enum, default_value_t = Study::Conditions)]
    pub study: Study,
    /// Condition such as `WX1,WY1,XZ4`; repeatable. Default: all 64.
    #[arg(long = "condition")]
    pub conditions: Vec<String>,
    /// Overrides the replicate count of the scale.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Overrides the attempt count of the scale.
    #[arg(long)]
    pub attempts: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub m_plus: u64,
    #[arg(long, default_value_t = 10)]
    pub m_minus: u64,
    #[arg(long, default_value_t = 10_000)]
    pub population: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}
