//! Command-line front end: fit models to CSV series, evaluate them
//! walk-forward against VAR baselines, and export phase portraits.
//!
//! [`execute_with`] runs one command against caller-supplied output
//! streams and returns the process exit status: 0 on success, 1 on usage
//! errors (bad flags, unreadable or malformed inputs), 2 when a
//! computation fails.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_COMPUTE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Compute(#[from] trendflow::Error),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    /// Errors met while reading user inputs are usage errors.
    pub fn input(e: trendflow::Error) -> Self {
        Self::Usage(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Compute(_) | Self::Output(_) => EXIT_COMPUTE,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "trendflow", version, about = "Polynomial dynamical-system models for multivariate time series")]
pub struct Cli {
    /// TOML file with default settings; flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a DS or VAR model to a series and write the model file
    Fit(FitArgs),
    /// Walk-forward evaluation with a comparison table
    Evaluate(EvaluateArgs),
    /// Tabulate previously written evaluation reports
    Compare(CompareArgs),
    /// Fixed points, nullclines, separatrices and trajectories of a model
    Portrait(PortraitArgs),
    /// Sweep a grid of starts and report whether the flow is trending
    Trending(TrendingArgs),
    /// Forecast one or more steps ahead to CSV
    Predict(PredictArgs),
}

#[derive(Debug, Args, Default, Clone)]
pub struct SeriesArgs {
    /// CSV file with a header row
    #[arg(long, value_name = "CSV")]
    pub input: Option<PathBuf>,
    /// Label column excluded from the numeric data
    #[arg(long)]
    pub time_column: Option<String>,
    /// Columns to model, each HEADER or HEADER=NAME
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    /// Time between rows
    #[arg(long)]
    pub dt: Option<f64>,
    /// Unit rescaling: max, none, or comma-separated factors
    #[arg(long)]
    pub rescale: Option<String>,
    /// Divide a variable by another CSV column: VAR=COLUMN
    #[arg(long)]
    pub normalize: Option<Vec<String>>,
    /// Divide a variable by the growth factor of a column: VAR=COLUMN
    #[arg(long)]
    pub adjust: Option<Vec<String>>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct DsArgs {
    /// Polynomial degree, or auto
    #[arg(long)]
    pub degree: Option<String>,
    /// Candidate degrees for auto, e.g. 1..5 or 1,2,4
    #[arg(long)]
    pub degrees: Option<String>,
    /// Interaction basis: full or separable
    #[arg(long)]
    pub basis: Option<String>,
    /// Ridge damping
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Integration step for forecasts
    #[arg(long)]
    pub h: Option<f64>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct VarArgs {
    /// VAR lag order, or auto
    #[arg(long)]
    pub lag: Option<String>,
    /// Candidate lag orders for auto
    #[arg(long)]
    pub lags: Option<String>,
    /// Fit VAR without an intercept
    #[arg(long)]
    pub no_intercept: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    #[command(flatten)]
    pub ds: DsArgs,
    #[command(flatten)]
    pub var: VarArgs,
    /// Model family: ds or var
    #[arg(long)]
    pub model: Option<String>,
    /// Validation window for degree or lag selection
    #[arg(long)]
    pub test_len: Option<usize>,
    /// Model file to write; printed to stdout when omitted
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    #[command(flatten)]
    pub ds: DsArgs,
    #[command(flatten)]
    pub var: VarArgs,
    /// Evaluated model: ds or var
    #[arg(long)]
    pub model: Option<String>,
    /// Baseline: var or none
    #[arg(long)]
    pub baseline: Option<String>,
    /// Number of one-step forecasts at the end of the series
    #[arg(long)]
    pub test_len: Option<usize>,
    /// JSON array of the evaluation reports
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Comparison table as CSV
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Report files written by evaluate (single reports or arrays)
    #[arg(required = true, value_name = "REPORT")]
    pub reports: Vec<PathBuf>,
    /// Comparison table as JSON
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Comparison table as CSV
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PortraitArgs {
    /// Model file
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Box as lo1,hi1,lo2,hi2,...
    #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true)]
    pub bounds: Option<Vec<f64>>,
    /// Multiple of the data maximum used when no box is given
    #[arg(long)]
    pub box_factor: Option<f64>,
    /// Field samples per axis
    #[arg(long)]
    pub grid: Option<usize>,
    /// Trajectory starts per axis
    #[arg(long)]
    pub trajectories: Option<usize>,
    /// Trending sweep samples per axis; 0 skips the sweep
    #[arg(long)]
    pub trending_grid: Option<usize>,
    /// Trajectory horizon
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Portrait JSON
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// SVG rendering (two or three variables)
    #[arg(long, value_name = "FILE")]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrendingArgs {
    /// Model file
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Sampled box as lo1,hi1,lo2,hi2,...
    #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true)]
    pub bounds: Option<Vec<f64>>,
    #[arg(long)]
    pub box_factor: Option<f64>,
    /// Samples per axis
    #[arg(long)]
    pub grid: Option<usize>,
    /// Place samples at cell centres instead of on the box edges
    #[arg(long)]
    pub interior: bool,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Integration step
    #[arg(long)]
    pub h: Option<f64>,
    /// Escape region upper bound as a multiple of the box upper bound
    #[arg(long)]
    pub escape_factor: Option<f64>,
    /// Report JSON; printed to stdout when omitted
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[command(flatten)]
    pub series: SeriesArgs,
    /// Starting state in raw units, comma-separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub state: Option<Vec<f64>>,
    /// The starting state is already in scaled units
    #[arg(long)]
    pub scaled: bool,
    /// Steps to forecast
    #[arg(long)]
    pub steps: Option<usize>,
    /// Integration step
    #[arg(long)]
    pub h: Option<f64>,
    /// Forecast CSV; printed to stdout when omitted
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

fn init_logging() {
    let level = match std::env::var("TRENDFLOW_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
}

/// Runs one command line (including the program name) and returns the
/// exit status.
pub fn execute_with<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
                _ => {
                    let rendered = e.to_string();
                    let first = rendered.lines().next().unwrap_or("invalid arguments");
                    let _ = writeln!(err, "{first} (see --help)");
                    EXIT_USAGE
                }
            };
        }
    };
    match commands::run(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Runs the process command line against stdout and stderr.
pub fn execute() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    execute_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
