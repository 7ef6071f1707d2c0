use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "cost", version, about = "COST parameters, transport, bias and heterogeneity")]
pub struct Cli {
    /// TOML config file, or a JSON output of this tool to replay.
    #[arg(long, global = true, env = "COST_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write to a file instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Effect measures for each population of a counts or risks file.
    Measures(MeasuresArgs),
    /// Predict a target population's risk from a source population.
    Transport(TransportArgs),
    /// Bias of RR(−) transport over a grid of h and baseline ratios.
    BiasSurface(BiasSurfaceArgs),
    /// Build attribute-mechanism populations and check the shared parameter.
    MechanismSim(MechanismArgs),
    /// Heterogeneity across studies on each effect scale.
    Meta(MetaArgs),
    /// Exhaustive verification of the propositions.
    OracleVerify(OracleArgs),
}

#[derive(Args, Debug)]
pub struct MeasuresArgs {
    /// CSV with `population,arm,events,total` or `population,p0,p1`.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
#[group(multiple = false)]
pub struct Monotonicity {
    /// Nobody is harmed by treatment.
    #[arg(long)]
    pub non_increasing: bool,
    /// Nobody is protected by treatment.
    #[arg(long)]
    pub non_decreasing: bool,
    /// Make no monotonicity assumption.
    #[arg(long)]
    pub no_monotonicity: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Introduce,
    Remove,
}

#[derive(Args, Debug)]
pub struct TransportArgs {
    /// Source populations as a counts or risks CSV.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub p0: Option<f64>,
    #[arg(long)]
    pub p1: Option<f64>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub i: Option<f64>,
    #[arg(long)]
    pub j: Option<f64>,
    /// Source baseline risk used with explicit g and h when no source risks are given.
    #[arg(long)]
    pub s0: Option<f64>,
    /// Target baseline risks (introduce family).
    #[arg(long, value_delimiter = ',')]
    pub t0: Option<Vec<f64>>,
    /// Target treated risks (remove family).
    #[arg(long, value_delimiter = ',')]
    pub t1: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    #[command(flatten)]
    pub monotonicity: Monotonicity,
    /// Also predict under shared RR(−), RR(+), RD and OR.
    #[arg(long)]
    pub compare: bool,
    /// Warn when the near-monotonicity ratio falls below this value.
    #[arg(long)]
    pub near_monotonicity_threshold: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BiasSurfaceArgs {
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub s0: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub h_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub f_grid: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Exhaustive,
    MonteCarlo,
}

#[derive(Args, Debug)]
pub struct MechanismArgs {
    #[arg(long, value_enum)]
    pub mode: Option<ModeKind>,
    /// Individuals per population in Monte Carlo mode.
    #[arg(long)]
    pub size: Option<u64>,
    /// Largest denominator for rational marginals in exhaustive mode.
    #[arg(long)]
    pub max_denominator: Option<u64>,
}

#[derive(Args, Debug)]
pub struct MetaArgs {
    /// Studies as a counts CSV, one population per study.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Scale of the switched-outcome metric.
    #[arg(long)]
    pub scale: Option<String>,
    #[arg(long)]
    pub pooled_rr_minus: Option<f64>,
    #[arg(long)]
    pub pooled_rr_plus: Option<f64>,
    #[arg(long)]
    pub pooled_rd: Option<f64>,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// Propositions to check, e.g. `P1,P4,collapsibility`; all by default.
    #[arg(long, value_delimiter = ',')]
    pub propositions: Option<Vec<String>>,
    #[arg(long)]
    pub max_population: Option<u64>,
    #[arg(long)]
    pub max_pair_population: Option<u64>,
    #[arg(long)]
    pub sampled_pairs: Option<u64>,
    #[arg(long)]
    pub max_stratum_population: Option<u64>,
    #[arg(long)]
    pub max_mechanism_population: Option<u64>,
    /// Inject a non-monotone individual as a negative control.
    #[arg(long, value_enum)]
    pub perturb: Option<PerturbArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PerturbArg {
    InjectCausal,
    InjectPreventative,
}
