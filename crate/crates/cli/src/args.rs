use std::fmt;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use poolscreen_core::{NoiseSemantics, StrategyKind};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "poolscreen",
    version,
    about = "Pooled testing: evaluate strategies, classify infection rates, run lab sessions"
)]
pub struct Cli {
    /// Cap on worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expected tests per person of an identification strategy over a grid of n and p.
    IdentifyEval(IdentifyEval),
    /// Worst-case (adversarially correlated) tests per person at marginal prevalence p.
    Worstcase(Worstcase),
    /// P_F, P_D and expected tests of the pooled classifier.
    ClassifyEval(ClassifyEval),
    /// Classifier operating points across pool sizes N.
    Roc(Roc),
    /// Non-adaptive testing matrices: encode, decode, check separability.
    #[command(subcommand)]
    Matrix(MatrixCommand),
    /// Run one protocol against a known infection vector and print the trace as JSON.
    Trace(Trace),
    /// Serve the interactive session HTTP API.
    Serve(Serve),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Exact enumeration when the instance is small and noiseless, Monte Carlo otherwise.
    #[default]
    Auto,
    Exact,
    Mc,
}

#[derive(Debug, Args, Serialize)]
pub struct Sampling {
    /// Evaluation method.
    #[arg(long, value_enum, default_value_t = Mode::Auto)]
    pub mode: Mode,
    /// Monte Carlo trials (per hypothesis for the classifier).
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    /// Master seed for Monte Carlo runs.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct Output {
    /// Write the table here instead of stdout; the run manifest goes to `<out>.manifest.json`.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct IdentifyEval {
    /// individual, halving4, soms4 or sofa.
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: StrategyKind,
    /// Population sizes (people); halving4 and soms4 only support 4.
    #[arg(long, value_delimiter = ',', default_value = "4")]
    pub n: Vec<usize>,
    /// Infection probabilities per person, comma-separated. Also SOFA's design prevalence.
    #[arg(long, value_delimiter = ',', required = true)]
    pub p: Vec<f64>,
    /// Probability that a test on a contaminated pool is positive.
    #[arg(long, default_value_t = 1.0)]
    pub sensitivity: f64,
    #[command(flatten)]
    pub sampling: Sampling,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct Worstcase {
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: StrategyKind,
    /// Population size (people), at most 16.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Marginal infection probabilities, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub p: Vec<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

/// Tree level at which testing starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartLevel {
    Level(usize),
    /// The level just above the subpools, where pools are pairs of subpools.
    Pairs,
}

impl FromStr for StartLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("pairs") {
            return Ok(StartLevel::Pairs);
        }
        s.parse()
            .map(StartLevel::Level)
            .map_err(|_| format!("expected a tree level or \"pairs\", got {s:?}"))
    }
}

impl fmt::Display for StartLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StartLevel::Level(l) => write!(f, "{l}"),
            StartLevel::Pairs => f.write_str("pairs"),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct Classifier {
    /// Infection probability under H0.
    #[arg(long)]
    pub p0: f64,
    /// Infection probability under H1.
    #[arg(long)]
    pub p1: f64,
    /// Prior probability of H0.
    #[arg(long, default_value_t = 0.5)]
    pub pi0: f64,
    /// Number of subpools; must divide N.
    #[arg(long = "L", value_name = "L")]
    #[serde(rename = "L")]
    pub subpools: usize,
    /// Decide H0 iff at most V subpools are infected (default: the MAP threshold).
    #[arg(long = "V", value_name = "V", allow_negative_numbers = true)]
    #[serde(rename = "V")]
    pub threshold: Option<i64>,
    /// First tested tree level: 0 is the whole sample, "pairs" the level above the subpools.
    #[arg(long, default_value_t = StartLevel::Level(0))]
    pub tau: StartLevel,
    /// Test sensitivity ρ.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// How imperfect sensitivity acts: per-test or per-subpool.
    #[arg(long, default_value_t = NoiseSemantics::PerTest)]
    pub noise: NoiseSemantics,
}

#[derive(Debug, Args, Serialize)]
pub struct ClassifyEval {
    /// People in the pooled sample.
    #[arg(long = "N", value_name = "N")]
    #[serde(rename = "N")]
    pub pool_size: usize,
    #[command(flatten)]
    pub classifier: Classifier,
    #[command(flatten)]
    pub sampling: Sampling,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct Roc {
    /// Pool sizes, comma-separated; each must be a multiple of L.
    #[arg(long = "N", value_name = "N", value_delimiter = ',', required = true)]
    #[serde(rename = "N")]
    pub pool_sizes: Vec<usize>,
    #[command(flatten)]
    pub classifier: Classifier,
    #[command(flatten)]
    pub sampling: Sampling,
    #[command(flatten)]
    #[serde(skip)]
    pub output: Output,
}

#[derive(Debug, Subcommand)]
pub enum MatrixCommand {
    /// Outcomes (one 0/1 per row) of a known infection vector.
    Encode {
        /// Matrix file: "m n" then m lines of 0/1.
        #[arg(long)]
        matrix: PathBuf,
        /// Infection vector as a 0/1 string, person 1 first.
        #[arg(long)]
        x: String,
    },
    /// The unique set of at most k people explaining the outcomes (1-based).
    Decode {
        #[arg(long)]
        matrix: PathBuf,
        /// Outcomes as a 0/1 string, row 1 first.
        #[arg(long)]
        outcomes: String,
        #[arg(long)]
        k: usize,
    },
    /// Whether Boolean sums of k columns (or of at most k with --up-to) are distinct.
    Separable {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        up_to: bool,
    },
}

#[derive(Debug, Args)]
pub struct Trace {
    /// Identification strategy to run; omit to run the classifier (then --N, --L, --V are required).
    #[arg(long, value_parser = parse_strategy, required_unless_present = "pool_size")]
    pub strategy: Option<StrategyKind>,
    /// Design prevalence for SOFA.
    #[arg(long, default_value_t = 0.05)]
    pub p: f64,
    /// Infection vector (people, or subpools for the classifier) as a 0/1 string.
    #[arg(long)]
    pub x: String,
    #[arg(long = "N", value_name = "N", requires_all = ["subpools", "threshold"], conflicts_with = "strategy")]
    pub pool_size: Option<usize>,
    #[arg(long = "L", value_name = "L")]
    pub subpools: Option<usize>,
    #[arg(long = "V", value_name = "V", allow_negative_numbers = true)]
    pub threshold: Option<i64>,
    #[arg(long, default_value_t = StartLevel::Level(0))]
    pub tau: StartLevel,
    /// Test sensitivity.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long, default_value_t = NoiseSemantics::PerTest)]
    pub noise: NoiseSemantics,
    /// Seed for noisy tests.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct Serve {
    #[arg(long, env = "POOLSCREEN_LISTEN", default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
    /// Directory holding one event log per session.
    #[arg(long, env = "POOLSCREEN_DATA_DIR", default_value = "poolscreen-data")]
    pub data_dir: PathBuf,
    /// Log filter, e.g. info or poolscreen_session=debug.
    #[arg(long, env = "POOLSCREEN_LOG", default_value = "info")]
    pub log_level: String,
}

fn parse_strategy(s: &str) -> Result<StrategyKind, String> {
    s.parse().map_err(|e: poolscreen_core::Error| e.to_string())
}
