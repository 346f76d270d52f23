use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Exit codes.
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;
pub const EXIT_BOUNDARY: u8 = 4;
pub const EXIT_NO_CONVERGENCE: u8 = 5;

#[derive(Parser, Debug)]
#[command(
    name = "contcat",
    version,
    about = "Continuous categorical distribution toolkit"
)]
pub struct Cli {
    /// Require an explicit --seed for every command that draws random numbers.
    #[arg(long, global = true)]
    pub strict: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the log normalizing constant.
    Logc(ParamArgs),
    /// Draw samples and write them as CSV.
    Sample(SampleArgs),
    /// Print the mean vector and covariance matrix.
    Moments(ParamArgs),
    /// Fit a distribution, or a regression when predictors are given.
    Fit(FitArgs),
    /// Proposals-per-acceptance benchmark of the three samplers.
    BenchSamplers(BenchArgs),
    /// Monte Carlo bias of the fitted mean.
    BiasSim(BiasArgs),
    /// Write a synthetic regression dataset.
    SimulateGlm(SimulateArgs),
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct Params {
    /// Natural parameters eta_1..eta_{K-1}, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<String>,
    /// Mean parameters lambda_1..lambda_K, comma separated; fractions like 1/3 work.
    #[arg(long)]
    pub lambda: Option<String>,
}

#[derive(Args, Debug)]
pub struct ParamArgs {
    #[command(flatten)]
    pub params: Params,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum MethodArg {
    Naive,
    Ordered,
    Permutation,
    Auto,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub params: Params,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: MethodArg,
    /// Proposals allowed per sample.
    #[arg(long, default_value_t = contcat::samplers::DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub predictors: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub l2: f64,
    /// Fraction of rows held out for evaluation.
    #[arg(long, default_value_t = 0.0)]
    pub holdout: f64,
    /// Seed for the holdout split.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Mix each row with the uniform composition (weight 0.001) before fitting.
    #[arg(long)]
    pub smooth: bool,
    /// Do not standardize predictor columns.
    #[arg(long)]
    pub raw: bool,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Write the fitted model as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum PriorArg {
    Dirichlet,
    Uniform,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 2)]
    pub kmin: usize,
    #[arg(long, default_value_t = 8)]
    pub kmax: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = contcat::samplers::DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `dirichlet` draws lambda per trial; `uniform` fixes lambda = 1/K.
    #[arg(long, value_enum, default_value = "dirichlet")]
    pub prior: PriorArg,
    /// Dirichlet concentration; 1/K when omitted.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BiasArgs {
    /// Fixed true lambda.
    #[arg(
        long,
        conflicts_with = "prior_uniform",
        required_unless_present = "prior_uniform"
    )]
    pub truth_lambda: Option<String>,
    /// Draw lambda uniformly on the simplex, once per block of trials.
    #[arg(long)]
    pub prior_uniform: bool,
    /// Number of categories under --prior-uniform.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 2)]
    pub nmin: usize,
    #[arg(long, default_value_t = 20)]
    pub nmax: usize,
    #[arg(long, default_value_t = 1)]
    pub nstep: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 100)]
    pub block_size: usize,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: MethodArg,
    /// Run the Newton fit on every dataset.
    #[arg(long)]
    pub refit: bool,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Weight matrix, rows separated by `;` (d rows of K-1 values). Drawn
    /// from N(0, scale^2) when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub weights: Option<String>,
    /// Bias vector (K-1 values). Drawn from N(0, scale^2) when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub bias: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Compositions CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Predictors CSV.
    #[arg(long)]
    pub predictors_out: PathBuf,
    /// True weights and bias as JSON.
    #[arg(long)]
    pub truth_out: Option<PathBuf>,
}

/// A failed command: message for stderr and the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    /// Maps a library error, prefixing `context` (usually a flag or path).
    pub fn from_lib(context: &str, e: contcat::Error) -> Self {
        use contcat::Error as E;
        let code = match &e {
            E::BudgetExceeded { .. } => EXIT_BUDGET,
            E::BoundaryAverage { .. } => EXIT_BOUNDARY,
            E::NonFiniteLoss { .. } => EXIT_NO_CONVERGENCE,
            E::Io(_) => 1,
            _ => EXIT_USAGE,
        };
        let message = if context.is_empty() {
            e.to_string()
        } else {
            format!("{context}: {e}")
        };
        Self { code, message }
    }
}

impl From<contcat::Error> for Failure {
    fn from(e: contcat::Error) -> Self {
        Self::from_lib("", e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
