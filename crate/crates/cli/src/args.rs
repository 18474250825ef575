use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::state::PresetName;

#[derive(Parser, Debug)]
#[command(name = "qib", version, about = "Classical and quantum Information Bottleneck rate curves")]
pub struct Cli {
    /// Log verbosity (-v info, -vv debug); RUST_LOG also works.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Quantum rate curve R(J) for a bipartite state.
    RateCurve(RateCurveArgs),
    /// Classical rate curve for a joint table or the diagonal of a preset.
    Classical(ClassicalArgs),
    /// Built-in numerical checks; exit 1 if any fails.
    Verify(VerifyArgs),
    /// CPTP report, Choi spectrum and optional evaluation of a channel file.
    ChannelInfo(ChannelInfoArgs),
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Named state: classical, bell_mix or vw_mix.
    #[arg(long)]
    pub preset: Option<PresetName>,

    /// Comma-separated preset parameters, e.g. 0.1,0.2,0.3,0.4.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub params: Vec<f64>,

    /// JSON state file: {"name", "params"} or {"dims": {"x", "y"}, "matrix": [[re, im], ...]}.
    #[arg(long)]
    pub state: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Master seed; falls back to QIB_SEED, then the config file, then 0.
    #[arg(long, env = "QIB_SEED")]
    pub seed: Option<u64>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,

    /// Solver configuration JSON; missing fields take default values.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, default_value = "qib_out")]
    pub out: PathBuf,

    /// Also write curve.svg.
    #[arg(long)]
    pub svg: bool,

    /// Show informations in bits on stdout (files stay in nats).
    #[arg(long)]
    pub bits: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    RandomSearch,
    FixedPoint,
}

impl Optimizer {
    pub fn name(self) -> &'static str {
        match self {
            Optimizer::RandomSearch => "random-search",
            Optimizer::FixedPoint => "fixed-point",
        }
    }
}

#[derive(Args, Debug)]
pub struct RateCurveArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// J targets as start:stop:count, endpoints included.
    #[arg(long, default_value = "0.05:0.95:19")]
    pub grid: String,

    #[arg(long, value_enum, default_value = "random-search")]
    pub optimizer: Optimizer,

    /// Beta values for the fixed-point optimizer, start:stop:count, geometric.
    #[arg(long)]
    pub beta_grid: Option<String>,

    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    /// Divide I(X;X~) by 2 H(X), matching the quantum normalization.
    Purified,
    /// Report I(X;X~) in nats.
    Raw,
}

#[derive(Args, Debug)]
pub struct ClassicalArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// J targets as start:stop:count, endpoints included.
    #[arg(long, default_value = "0.05:0.95:19")]
    pub grid: String,

    /// Beta sweep, start:stop:count, geometric.
    #[arg(long)]
    pub beta_grid: Option<String>,

    /// Size of the compressed alphabet (default |X|).
    #[arg(long)]
    pub d_xt: Option<usize>,

    #[arg(long, value_enum, default_value = "purified")]
    pub normalization: Norm,

    /// Write the per-beta (I_xxt, I_xty) trace to sweep.csv.
    #[arg(long)]
    pub sweep: bool,

    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, env = "QIB_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Relative tolerance of the finite-difference gradient check.
    #[arg(long, default_value_t = 1e-5)]
    pub grad_tol: f64,

    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ChannelInfoArgs {
    /// Channel JSON: {"d_in", "d_out", "kraus": [...]} or {"d_in", "d_out", "choi": [...]}.
    pub file: PathBuf,

    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long)]
    pub bits: bool,
}
