//! `geodp`: publish, reconstruct and query differentially private point sets.

mod bench;
mod commands;
mod provenance;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "geodp", version, about = "Differentially private spatial point-set publishing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset as CSV.
    Synth(SynthArgs),
    /// Publish a point set (or a baseline mechanism over it).
    Publish(PublishArgs),
    /// Reconstruct a point set from a release.
    Reconstruct(ReconstructArgs),
    /// Answer range-count or median queries against a published document.
    Query(QueryArgs),
    /// Run an experiment sweep and write (mechanism, parameter, error) rows.
    Bench(BenchArgs),
    /// Build or print an error table.
    #[command(subcommand)]
    Table(TableCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthFamily {
    /// Every value 0.5.
    Repeating,
    /// i/(n-1).
    EquallySpaced,
    /// Sorted uniform values.
    Uniform,
    /// Sorted exponentials scaled to a maximum of 1.
    Exponential,
    /// Two Gaussian blobs in the unit square (x,y points).
    Clustered,
    /// 129 values with a prescribed median local sensitivity (see --ls).
    MedianSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseArg {
    On,
    Off,
}

impl From<NoiseArg> for geodp::Noise {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::On => geodp::Noise::On,
            NoiseArg::Off => geodp::Noise::Off,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    /// Sorted Hilbert projection with grouped Laplace sums.
    Grouped,
    /// Equi-width histogram.
    Equiwidth,
    /// Haar-wavelet histogram.
    Wavelet,
}

#[derive(Args, Debug, Serialize)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub family: SynthFamily,
    #[arg(long, short = 'n', default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Target local sensitivity for `median-set`.
    #[arg(long, default_value_t = 0.3)]
    pub ls: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct PublishArgs {
    /// CSV of points with an `x,y` or `lat,lon` header.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub epsilon: f64,
    /// Group size: a positive integer or `auto`.
    #[arg(long, default_value = "auto")]
    pub k: String,
    #[arg(long, default_value_t = geodp::transform::DEFAULT_ORDER)]
    pub order: u32,
    /// Domain rectangle `min_x,min_y,max_x,max_y`; defaults to the unit square.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    pub domain: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = NoiseArg::On)]
    pub noise: NoiseArg,
    #[arg(long, value_enum, default_value_t = Mechanism::Grouped)]
    pub mechanism: Mechanism,
    /// Bins per axis for `equiwidth`.
    #[arg(long, default_value_t = 41)]
    pub bins: usize,
    /// Decomposition levels for `wavelet`.
    #[arg(long, default_value_t = 9)]
    pub levels: u32,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub release: PathBuf,
    /// Spread coincident points over small discs (for plotting only).
    #[arg(long)]
    pub diffuse: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the fitted curve positions, one per line.
    #[arg(long)]
    #[serde(skip)]
    pub values_out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct QueryArgs {
    /// A release, equi-width histogram or wavelet document.
    #[arg(long)]
    pub release: PathBuf,
    /// CSV of rectangles `min_x,min_y,max_x,max_y`.
    #[arg(long, conflicts_with = "median", required_unless_present = "median")]
    pub queries: Option<PathBuf>,
    /// Report the reconstructed median instead of range counts.
    #[arg(long)]
    pub median: bool,
    /// Also write the 1D density estimate (grouped releases only).
    #[arg(long)]
    #[serde(skip)]
    pub density_out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Ungrouped Laplace error against n, per dataset family.
    ErrVsN,
    /// Measured and predicted error against group size.
    GroupSize,
    /// Grouped median against the smooth-sensitivity median.
    Median,
    /// Range-count error of the three mechanisms against query size.
    Range,
}

#[derive(Args, Debug, Serialize)]
pub struct BenchArgs {
    #[arg(value_enum)]
    pub experiment: Experiment,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dataset size (group-size and range experiments).
    #[arg(long, short = 'n', default_value_t = 10_000)]
    pub n: usize,
    /// Dataset families for err-vs-n (`repeating`, `equally_spaced`, `file:<path>`).
    #[arg(long, value_delimiter = ',', default_value = "repeating,equally_spaced")]
    pub family: Vec<String>,
    /// Sizes for err-vs-n.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000,2000,10000,100000")]
    pub sizes: Vec<usize>,
    /// Group sizes for group-size.
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20,50,100,200,500,1000")]
    pub ks: Vec<usize>,
    /// Local sensitivities for median.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.3,0.4,0.5")]
    pub ls: Vec<f64>,
    /// Query side lengths (fractions of the domain) for range.
    #[arg(long, value_delimiter = ',', default_value = "0.03125,0.0625,0.125,0.25,0.5")]
    pub widths: Vec<f64>,
    /// Random squares per width for range.
    #[arg(long, default_value_t = 1000)]
    pub queries: usize,
    #[arg(long, default_value_t = geodp::transform::DEFAULT_ORDER)]
    pub order: u32,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum TableCommand {
    /// Estimate a table by Monte Carlo.
    Build(TableBuildArgs),
    /// Print a table (the bundled one by default) as CSV.
    Print(TablePrintArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct TableBuildArgs {
    #[arg(long, default_value = "repeating")]
    pub family: String,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long = "epsilon", value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    #[arg(long, default_value_t = geodp::error_model::DEFAULT_TABLE_TRIALS)]
    pub trials: usize,
    #[arg(long, default_value_t = geodp::error_model::DEFAULT_TABLE_SEED)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TablePrintArgs {
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or unusable input.
    Input(anyhow::Error),
    /// A result violated an invariant the library guarantees.
    Internal(anyhow::Error),
}

impl From<geodp::Error> for Failure {
    fn from(e: geodp::Error) -> Self {
        Failure::Input(e.into())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.into())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Input(e.into())
    }
}

pub type CmdResult = Result<(), Failure>;

pub(crate) fn input_err(msg: impl Into<String>) -> Failure {
    Failure::Input(anyhow::anyhow!(msg.into()))
}

pub(crate) fn internal_err(msg: impl Into<String>) -> Failure {
    Failure::Internal(anyhow::anyhow!(msg.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Publish(a) => commands::publish(&a),
        Command::Reconstruct(a) => commands::reconstruct(&a),
        Command::Query(a) => commands::query(&a),
        Command::Bench(a) => bench::run(&a),
        Command::Table(TableCommand::Build(a)) => commands::table_build(&a),
        Command::Table(TableCommand::Print(a)) => commands::table_print(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(3)
        }
    }
}
