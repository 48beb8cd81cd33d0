use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "saddle-h2", version, about = "H2 performance of saddle-point optimization dynamics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Exact and closed-form H2² of one variant.
    Analyze(AnalyzeArgs),
    /// H2² over a grid of rho or eps values, as CSV.
    Sweep(SweepArgs),
    /// Monte-Carlo estimate of the steady-state output variance.
    Simulate(SimulateArgs),
    /// All four resource-allocation formulations over a rho grid.
    Table1(Table1Args),
    /// Re-run the command recorded in a manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze(_) => "analyze",
            Command::Sweep(_) => "sweep",
            Command::Simulate(_) => "simulate",
            Command::Table1(_) => "table1",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Variant {
    SaddlePoint,
    Regularized,
    Augmented,
    DualAscent,
    AddSp,
    RaCent,
    RaDist,
    RaCentDual,
    RaDistDual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Graph {
    Line,
    Ring,
    Complete,
    Star,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Rho,
    Eps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Lin,
    Log,
}

/// Where the problem data comes from. Resource-allocation variants may be
/// specified entirely by flags.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ProblemArgs {
    /// JSON problem file.
    pub problem: Option<PathBuf>,
    /// Graph topology; overrides the file's graph.
    #[arg(long, value_enum)]
    pub graph: Option<Graph>,
    /// Number of graph nodes (defaults to the number of agents).
    #[arg(long)]
    pub n: Option<usize>,
    /// Uniform cost for resource allocation given by flags.
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// Dual time constant for resource allocation given by flags.
    #[arg(long, default_value_t = 1.0)]
    pub tau_nu: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VariantArgs {
    #[arg(long, value_enum, default_value = "saddle_point")]
    pub variant: Variant,
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub variant: VariantArgs,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub variant: VariantArgs,
    #[arg(long, value_enum)]
    pub param: Param,
    /// `start:stop:points`
    #[arg(long)]
    pub grid: String,
    #[arg(long, value_enum, default_value = "lin")]
    pub scale: Scale,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 200.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 20.0)]
    pub burn_in: f64,
    #[arg(long, default_value_t = 16)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub variant: VariantArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Also write one trajectory as CSV.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// Trial whose noise stream the trajectory uses.
    #[arg(long, default_value_t = 0)]
    pub trial: usize,
    /// Record every `stride`-th step of the trajectory.
    #[arg(long, default_value_t = 100)]
    pub stride: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Table1Args {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated rho values.
    #[arg(long, default_value = "0,0.1,1,10,100,1000")]
    pub rho_grid: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write the primary output here instead of the recorded path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
