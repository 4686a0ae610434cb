use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "eolopt", version, about = "Approximately optimal excess-of-loss retentions")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct GlobalArgs {
    /// Seed for every random draw
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on this)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for output files
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Machine-readable output on stdout
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Model-based optimal retention
    Optimize(OptimizeArgs),
    /// Plug-in estimate with standard error from a loss file
    Estimate(EstimateArgs),
    /// Monte Carlo studies
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Summary, Lorenz curve, density and retention curves for a loss file
    Analyze(AnalyzeArgs),
    /// Fast internal consistency checks
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Constant,
    Decreasing,
    #[value(alias = "stddev")]
    Sd,
    Sharpe,
    /// stop-loss on a single aggregate claim
    Sl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Pareto,
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Loss CSV used as the empirical severity model
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct RuleArgs {
    #[arg(long, value_enum)]
    pub rule: RuleKind,
    /// Constant (and stop-loss) loading
    #[arg(long)]
    pub rho: Option<f64>,
    /// Decreasing loading, ρ = δ/√N
    #[arg(long)]
    pub delta: Option<f64>,
    /// Nominal loading of the StdDev and Sharpe rules
    #[arg(long)]
    pub rho0: Option<f64>,
    /// Risk level; the measure defaults to VaR at this level
    #[arg(long)]
    pub p: Option<f64>,
    /// Distortion measure, e.g. var:0.75, es:0.9, wang:0.5
    #[arg(long)]
    pub measure: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub rule: RuleArgs,
    /// Portfolio size
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Edgeworth order (2 or 3) for the constant rule under VaR
    #[arg(long)]
    pub edgeworth: Option<u8>,
    #[arg(long, default_value_t = 1000)]
    pub grid_points: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub rule: RuleArgs,
    /// Confidence level of the interval
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// KDE bandwidth in loss units
    #[arg(long, default_value_t = 0.1)]
    pub bandwidth: f64,
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct McArgs {
    /// Pareto shape of the simulated claims
    #[arg(long, default_value_t = 9.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 8.0)]
    pub lambda: f64,
    #[arg(long = "B")]
    pub b: Option<usize>,
    /// B = 50000, M = 5000
    #[arg(long)]
    pub full_scale: bool,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum SimulateCommand {
    /// Actual vs approximate optimal retentions
    Table1 {
        #[command(flatten)]
        mc: McArgs,
        /// Restrict to these rules
        #[arg(long, value_enum, value_delimiter = ',')]
        only: Vec<RuleKind>,
        #[arg(long = "N", value_delimiter = ',', default_values_t = [10usize, 25, 100])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0.75)]
        p: f64,
    },
    /// Sampling behaviour of the plug-in estimator
    Table2 {
        #[command(flatten)]
        mc: McArgs,
        #[arg(long, value_enum, value_delimiter = ',')]
        only: Vec<RuleKind>,
        #[arg(long = "N", value_delimiter = ',', default_values_t = [500usize, 2000, 10000])]
        n: Vec<usize>,
        #[arg(long = "M")]
        m: Option<usize>,
        #[arg(long, default_value_t = 0.75)]
        p: f64,
        #[arg(long, default_value_t = 0.1)]
        bandwidth: f64,
    },
    /// Probability that the total cost exceeds its own VaR at the optimum
    Insolvency {
        #[command(flatten)]
        mc: McArgs,
        #[arg(long = "N", value_delimiter = ',', default_values_t = [2usize, 3, 5, 10])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0.2)]
        rho: f64,
        #[arg(long, default_value_t = 0.75)]
        p: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sweep {
    Rho,
    P,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "rho")]
    pub sweep: Sweep,
    /// Effective loading held fixed in a level sweep
    #[arg(long, default_value_t = 0.005)]
    pub fixed_rho: f64,
    /// Risk level held fixed in a loading sweep
    #[arg(long, default_value_t = 0.9)]
    pub fixed_p: f64,
    /// Sweep grid as lo:hi:count
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [RuleKind::Decreasing, RuleKind::Sd, RuleKind::Sharpe])]
    pub rules: Vec<RuleKind>,
    /// Use ES instead of VaR
    #[arg(long)]
    pub es: bool,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = 0.1)]
    pub bandwidth: f64,
    /// Also write SVG charts
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SelfcheckArgs {
    /// Replace the reference normal quantile table (CSV of p,z)
    #[arg(long)]
    pub quantile_table: Option<PathBuf>,
}
