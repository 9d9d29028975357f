use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug, Serialize)]
#[command(name = "mtlsim", version, about = "Exact and Monte Carlo experiments on two-point multitask constructions")]
pub struct Cli {
    /// Worker threads for Monte Carlo trials (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Enumeration limits, e.g. `max_pool_samples=50000`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub guard: Vec<String>,

    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Cmd {
    /// Build and save a scenario.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
    /// Error probability and excess risk of the learners.
    #[command(subcommand)]
    Risk(RiskCmd),
    /// KL divergence between the two labelings.
    #[command(subcommand)]
    Kl(KlCmd),
    /// Error of the optimal test between the two labelings.
    #[command(subcommand)]
    Testerror(TestErrorCmd),
    /// Exact joint test over N_small tasks by full enumeration.
    Bruteforce(BruteforceArgs),
    /// Evaluate a tail or approximation bound.
    #[command(subcommand)]
    Bounds(BoundsCmd),
    /// Closed-form rate expressions.
    Rates(RatesArgs),
    /// Random-construction feasibility.
    #[command(subcommand)]
    Construction(ConstructionCmd),
    /// Grid over numeric parameters from a key=value config file.
    Sweep(SweepArgs),
}

impl Cmd {
    pub fn name(&self) -> &'static str {
        match self {
            Cmd::Scenario(_) => "scenario make",
            Cmd::Risk(RiskCmd::Exact(_)) => "risk exact",
            Cmd::Risk(RiskCmd::Mc(_)) => "risk mc",
            Cmd::Kl(KlCmd::Exact(_)) => "kl exact",
            Cmd::Kl(KlCmd::Mc(_)) => "kl mc",
            Cmd::Testerror(_) => "testerror mc",
            Cmd::Bruteforce(_) => "bruteforce",
            Cmd::Bounds(_) => "bounds eval",
            Cmd::Rates(_) => "rates",
            Cmd::Construction(_) => "construction mc",
            Cmd::Sweep(_) => "sweep",
        }
    }
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioCmd {
    /// Build a scenario and write it as JSON.
    Make(ScenarioSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    Agnostic,
    FairNoisy,
    Background,
}

/// Inline scenario parameters. Which ones are required depends on the family.
#[derive(Args, Debug, Clone, Default, Serialize)]
pub struct ScenarioSpec {
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Samples per task.
    #[arg(long)]
    pub n: Option<u64>,
    /// Number of source tasks.
    #[arg(long = "N")]
    pub tasks: Option<u64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub c_beta: Option<f64>,
    /// Agnostic: sets ε = √(ln(1/δ)/n).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Agnostic ε, or fair/noisy fair level (with --eps0 and --alpha).
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub eps0: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub n_p: Option<u64>,
    #[arg(long)]
    pub n_q: Option<u64>,
    #[arg(long)]
    pub n_target: Option<u64>,
    #[arg(long)]
    pub c0_const: Option<f64>,
    #[arg(long)]
    pub c1_const: Option<f64>,
    #[arg(long)]
    pub y_star: Option<u8>,
    /// Fix the fair subset instead of drawing task types per trial.
    #[arg(long)]
    pub materialize: bool,
}

/// A scenario from a JSON file or from inline parameters.
#[derive(Args, Debug, Clone, Default, Serialize)]
pub struct ScenarioSource {
    #[arg(long, conflicts_with = "family")]
    pub scenario: Option<PathBuf>,
    #[command(flatten)]
    pub spec: ScenarioSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerArg {
    Erm,
    Pool,
    Oracle,
    Ibb,
}

#[derive(Args, Debug, Serialize)]
pub struct Seeded {
    #[arg(long)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskCmd {
    /// Exact error probability and excess risk.
    Exact(RiskExactArgs),
    /// Monte Carlo risk; several learners share the same draws.
    Mc(RiskMcArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct RiskExactArgs {
    #[command(flatten)]
    pub source: ScenarioSource,
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    pub learner: Vec<LearnerArg>,
    /// Task index for `erm` (0-based).
    #[arg(long, default_value_t = 0)]
    pub task: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct RiskMcArgs {
    #[command(flatten)]
    pub source: ScenarioSource,
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    pub learner: Vec<LearnerArg>,
    #[arg(long, default_value_t = 0)]
    pub task: usize,
    /// IBB ball constant; a list runs one IBB learner per value.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub c0: Vec<f64>,
    /// IBB confidence level.
    #[arg(long, default_value_t = 0.05)]
    pub ibb_delta: f64,
    #[command(flatten)]
    pub mc: Seeded,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KlCmd {
    /// Per-task and total mixture KL with the Fano-type bounds.
    Exact(ScenarioOnly),
    /// Mean log-likelihood ratio estimate of the total KL.
    Mc(KlMcArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct ScenarioOnly {
    #[command(flatten)]
    pub source: ScenarioSource,
}

#[derive(Args, Debug, Serialize)]
pub struct KlMcArgs {
    #[command(flatten)]
    pub source: ScenarioSource,
    #[command(flatten)]
    pub mc: Seeded,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestErrorCmd {
    /// Error of the optimal label test, simulated.
    Mc(TestErrorArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct TestErrorArgs {
    #[command(flatten)]
    pub source: ScenarioSource,
    #[command(flatten)]
    pub mc: Seeded,
    /// Add one row per realized number of informative tasks.
    #[arg(long)]
    pub conditional: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct BruteforceArgs {
    #[command(flatten)]
    pub source: ScenarioSource,
    #[arg(long = "N-small")]
    pub n_small: usize,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsCmd {
    Eval(BoundsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundName {
    ChernoffUpper,
    ChernoffLower,
    Slud,
    Hoeffding,
    ChernoffHoeffding,
    BerryEsseen,
    Stirling,
}

#[derive(Args, Debug, Serialize)]
pub struct BoundsArgs {
    #[arg(long, value_enum)]
    pub name: BoundName,
    /// `k=v,...`
    #[arg(long, default_value = "")]
    pub params: String,
}

#[derive(Args, Debug, Serialize)]
#[command(group(ArgGroup::new("which").required(true).multiple(false)))]
pub struct RatesArgs {
    /// params: beta, sizes=a:b:..., rhos=a:b:...
    #[arg(long, group = "which")]
    pub minimax: bool,
    /// params: alpha, beta, c_beta, c0, c_rho, d, n, N, delta, rho_bar
    #[arg(long, group = "which")]
    pub pooling: bool,
    /// Pooled bound at α = t*/N from the fair/noisy levels.
    /// params: n, N, beta, c_beta, c0, delta
    #[arg(long, group = "which")]
    pub fair_noisy: bool,
    #[arg(long, default_value = "")]
    pub params: String,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstructionCmd {
    /// Feasibility frequency of the random construction.
    Mc(ConstructionArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct ConstructionArgs {
    #[arg(long = "n-plus-1")]
    pub n_plus_1: usize,
    #[command(flatten)]
    pub mc: Seeded,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
}
