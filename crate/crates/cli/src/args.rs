use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use olpp_core::datagen::FaultId;
use olpp_core::id::{DEFAULT_K1, DEFAULT_K2};
use olpp_core::monitoring::{MonitorConfig, DEFAULT_ALPHA, DEFAULT_LAG};
use olpp_core::neighbors::{GraphConfig, DEFAULT_GRAPH_K};
use olpp_core::projections::{Method, SingularStrategy};

#[derive(Debug, Parser)]
#[command(name = "olpp", version, about = "Process monitoring with OLPP and MLE intrinsic dimension")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a benchmark dataset as CSV.
    Simulate(SimulateArgs),
    /// Estimate the intrinsic dimension of a dataset.
    IdEstimate(IdArgs),
    /// Fit a monitoring model on normal-operation data.
    Train(TrainArgs),
    /// Monitor a dataset with a trained model.
    Detect(DetectArgs),
    /// Compute FDR/FAR from labeled detection results.
    Evaluate(EvaluateArgs),
    /// Compare methods across normal and faulty test sets.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum System {
    Numerical,
    Cstr,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub system: System,
    /// Fault to inject (F1-F3 numerical, F4-F5 CSTR).
    #[arg(long, value_parser = parse_fault)]
    pub fault: Option<FaultId>,
    /// Number of samples (default 1000 numerical, 6000 CSTR).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Fault onset sample index (default: the fault's standard onset).
    #[arg(long)]
    pub onset: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Record raw CSTR measurements without the low-pass smoother.
    #[arg(long)]
    pub raw: bool,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IdArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K1)]
    pub k1: usize,
    #[arg(long, default_value_t = DEFAULT_K2)]
    pub k2: usize,
    /// Also run the stability sweep k1 ∈ {5,10}, k2 ∈ {15,20,25}, strides 1-4.
    #[arg(long)]
    pub sweep: bool,
    /// JSON output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Model-building options shared by `train` and `benchmark`.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Number of graph neighbors.
    #[arg(long, default_value_t = DEFAULT_GRAPH_K)]
    pub k: usize,
    /// Heat-kernel width, or `auto` for the median squared k-th neighbor distance.
    #[arg(long, default_value = "auto", value_parser = parse_q)]
    pub q: HeatWidth,
    #[arg(long, default_value_t = DEFAULT_K1)]
    pub k1: usize,
    #[arg(long, default_value_t = DEFAULT_K2)]
    pub k2: usize,
    /// Confidence level of the control limits.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Remedy for a singular X D Xᵀ.
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    /// Ridge β for `regularize`, or the trace scale for `scaled`.
    #[arg(long)]
    pub beta: Option<f64>,
    /// DPCA lag.
    #[arg(long, default_value_t = DEFAULT_LAG)]
    pub lag: usize,
    /// Retained dimension; overrides the MLE estimate.
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    /// Use X D Xᵀ as is.
    None,
    /// Project onto leading principal components first.
    Pca,
    /// Add βI.
    Regularize,
    /// Add βI with β scaled by the mean diagonal (default).
    Scaled,
    /// Moore-Penrose pseudo-inverse.
    Pinv,
    /// Solve through the SVD of the data.
    Svd,
}

impl ModelArgs {
    pub fn config(&self, method: Method) -> Result<MonitorConfig> {
        let mut svd_variant = false;
        let strategy = match (self.strategy, self.beta) {
            (None, None) => SingularStrategy::default(),
            (None | Some(StrategyArg::Regularize), Some(beta)) => SingularStrategy::Regularize { beta },
            (Some(StrategyArg::Regularize), None) => bail!("--strategy regularize needs --beta"),
            (Some(StrategyArg::Scaled), beta) => SingularStrategy::ScaledRegularize {
                scale: beta.unwrap_or(1e-6),
            },
            (Some(StrategyArg::None), None) => SingularStrategy::NoRemedy,
            (Some(StrategyArg::Pca), None) => SingularStrategy::PcaProject {
                variance_kept: SingularStrategy::DEFAULT_VARIANCE_KEPT,
            },
            (Some(StrategyArg::Pinv), None) => SingularStrategy::PseudoInverse,
            (Some(StrategyArg::Svd), None) => {
                svd_variant = true;
                SingularStrategy::PseudoInverse
            }
            (Some(s), Some(_)) => bail!("--beta does not apply to --strategy {s:?}"),
        };
        if svd_variant && method != Method::Olpp {
            bail!("--strategy svd applies to olpp only");
        }
        Ok(MonitorConfig {
            method,
            graph: GraphConfig { k: self.k, q: self.q.0 },
            k1: self.k1,
            k2: self.k2,
            alpha: self.alpha,
            strategy,
            lag: self.lag,
            dim: self.dim,
            svd_variant,
        })
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Normal-operation training CSV.
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long, default_value = "olpp", value_parser = parse_method)]
    pub method: Method,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output directory for model.json and training_report.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Output directory for statistics.csv, summary.json and chart.svg.
    #[arg(long)]
    pub out: PathBuf,
    /// Also draw the monitoring chart.
    #[arg(long)]
    pub svg: bool,
    /// Logarithmic statistic axis in the chart.
    #[arg(long)]
    pub log_scale: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Statistics CSV written by `detect`.
    #[arg(long, conflicts_with_all = ["model", "test"])]
    pub records: Option<PathBuf>,
    #[arg(long, requires = "test")]
    pub model: Option<PathBuf>,
    /// Labeled test CSV.
    #[arg(long, requires = "model")]
    pub test: Option<PathBuf>,
    /// JSON output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Numerical,
    Cstr,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Built-in suite; alternatively give --train and one --test per case.
    #[arg(long, value_enum, conflicts_with_all = ["train", "test"])]
    pub suite: Option<Suite>,
    #[arg(long, requires = "test")]
    pub train: Option<PathBuf>,
    /// Labeled test CSV; repeat for each case.
    #[arg(long, requires = "train")]
    pub test: Vec<PathBuf>,
    /// Methods to compare, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "pca,lpp,olpp", value_parser = parse_method)]
    pub method: Vec<Method>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Base seed of the built-in suites.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for benchmark.csv and benchmark.json.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_fault(s: &str) -> std::result::Result<FaultId, String> {
    s.parse().map_err(|e: olpp_core::Error| e.to_string())
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: olpp_core::Error| e.to_string())
}

/// `None` selects the data-driven width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatWidth(pub Option<f64>);

fn parse_q(s: &str) -> std::result::Result<HeatWidth, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(HeatWidth(None));
    }
    match s.parse::<f64>() {
        Ok(q) if q > 0.0 && q.is_finite() => Ok(HeatWidth(Some(q))),
        _ => Err(format!("expected a positive number or 'auto', got '{s}'")),
    }
}
