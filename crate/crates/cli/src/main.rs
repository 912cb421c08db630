//! `schinzel-lab`: seeded, reproducible number-theory experiments from the
//! command line. One experiment per invocation; results go to stdout (or
//! `--out`) as JSON, or as CSV for the tabular subcommands.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 budget
//! exhaustion, 3 internal invariant violation.

mod emit;
mod parse;
mod run;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "schinzel-lab", version, about, disable_help_subcommand = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format; CSV is available for the tabular subcommands only.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write the report to a file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,

    /// Worker thread count (defaults to the number of cores). Results are
    /// independent of this setting; only scheduling changes.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
pub enum Command {
    /// Density of suitable polynomials among a degree pattern (truncated
    /// Euler product with tail interval).
    Density(DensityArgs),
    /// Truncated singular series of an explicit tuple at a given x.
    Series(SeriesArgs),
    /// Log-weighted prime-value count of a tuple up to x.
    Theta(ThetaArgs),
    /// Least prime value of a tuple, or the sampled least-prime experiment
    /// over a coefficient box.
    LeastPrime(LeastPrimeArgs),
    /// Pair correlation of polynomial prime values at two points.
    PairCorr(PairCorrArgs),
    /// First and second moments of the prediction error over a box.
    Dispersion(DispersionArgs),
    /// Exact moment identities of the finite-field root model.
    ModelVerify(ModelVerifyArgs),
    /// Rational point or obstruction place for a diagonal conic.
    Conic(ConicArgs),
    /// Conic bundles over prime fibers: indicator, identity check, or
    /// search for a solvable fiber.
    Bundle(BundleArgs),
    /// Representation scan for x^2 + a y^2 = f(m), or the sampled
    /// solvability proportion.
    Chatelet(ChateletArgs),
    /// Exact solvability constants: r_d, the lower-bound product, or c_ell.
    Prob(ProbArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Density(_) => "density",
            Command::Series(_) => "series",
            Command::Theta(_) => "theta",
            Command::LeastPrime(_) => "least-prime",
            Command::PairCorr(_) => "pair-corr",
            Command::Dispersion(_) => "dispersion",
            Command::ModelVerify(_) => "model-verify",
            Command::Conic(_) => "conic",
            Command::Bundle(_) => "bundle",
            Command::Chatelet(_) => "chatelet",
            Command::Prob(_) => "prob",
        }
    }
}

#[derive(Args, Serialize)]
pub struct DensityArgs {
    /// Degrees of the tuple, comma-separated (e.g. 2 or 1,1).
    #[arg(long, value_delimiter = ',', required = true)]
    pub degrees: Vec<u32>,
    /// Keep only coefficient tuples coprime to this modulus pattern.
    #[arg(long, default_value_t = 1)]
    pub modulus: u64,
    /// Truncation point of the Euler product.
    #[arg(long, default_value_t = 1_000_000)]
    pub truncation: u64,
}

#[derive(Args, Serialize)]
pub struct SeriesArgs {
    /// Polynomial as comma-separated coefficients, constant first
    /// (repeat for a tuple): --poly 1,0,1 is 1 + t^2.
    #[arg(long = "poly", required = true, allow_hyphen_values = true)]
    pub polys: Vec<String>,
    /// Evaluation point; the Euler product runs over primes <= ln x.
    #[arg(long)]
    pub x: f64,
    /// Progression anchor n0 (inputs run over m = n0 mod M).
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub anchor: i64,
    /// Progression modulus M.
    #[arg(long, default_value_t = 1)]
    pub modulus: u64,
}

#[derive(Args, Serialize)]
pub struct ThetaArgs {
    /// Polynomial coefficients, constant first; repeat for a tuple.
    #[arg(long = "poly", required = true, allow_hyphen_values = true)]
    pub polys: Vec<String>,
    /// Count prime values at inputs m <= x.
    #[arg(long)]
    pub x: f64,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub anchor: i64,
    #[arg(long, default_value_t = 1)]
    pub modulus: u64,
}

#[derive(Args, Serialize)]
pub struct LeastPrimeArgs {
    /// Explicit tuple mode: polynomial coefficients, constant first.
    #[arg(long = "poly", allow_hyphen_values = true)]
    pub polys: Vec<String>,
    /// Explicit mode: scan inputs up to (log height)^exponent.
    #[arg(long)]
    pub exponent: Option<f64>,
    /// Explicit mode: scan inputs up to this bound instead.
    #[arg(long)]
    pub bound: Option<u64>,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub anchor: i64,
    #[arg(long, default_value_t = 1)]
    pub modulus: u64,
    /// Experiment mode: degree of the sampled polynomials.
    #[arg(long)]
    pub degrees: Option<u32>,
    /// Experiment mode: coefficient height of the sampling box.
    #[arg(long, short = 'H')]
    pub height: Option<i64>,
    /// Experiment mode: number of sampled polynomials.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Experiment mode: epsilon in the bound H (log H)^(d + epsilon).
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Serialize)]
pub struct PairCorrArgs {
    /// Coefficient height of the box.
    #[arg(long, short = 'H')]
    pub height: i64,
    /// Degree of the enumerated polynomials.
    #[arg(long)]
    pub degrees: u32,
    /// First evaluation point.
    #[arg(long)]
    pub k: u64,
    /// Second evaluation point.
    #[arg(long)]
    pub m: u64,
    /// Estimate from this many stratified samples instead of enumerating.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Serialize)]
pub struct DispersionArgs {
    /// Degrees of the tuple, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub degrees: Vec<u32>,
    /// Coefficient height of the box.
    #[arg(long, short = 'H')]
    pub height: i64,
    /// Evaluation point; defaults to (ln height)^1.5.
    #[arg(long)]
    pub x: Option<f64>,
    /// Coefficient congruence modulus for the box.
    #[arg(long, default_value_t = 1)]
    pub modulus: i64,
    /// Coefficient residues mod the modulus: one comma list per
    /// polynomial (constant first), polynomials separated by ';'.
    #[arg(long, allow_hyphen_values = true)]
    pub residues: Option<String>,
    /// Progression anchor for the inputs m.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub anchor: i64,
    /// Sample the box instead of enumerating it.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep one record per tuple (implied by --format csv).
    #[arg(long)]
    pub rows: bool,
}

#[derive(Args, Serialize)]
pub struct ModelVerifyArgs {
    /// The prime ell of the residue model.
    #[arg(long)]
    pub ell: u64,
    /// Degrees of the modeled tuple, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub degrees: Vec<u32>,
}

#[derive(Args, Serialize)]
pub struct ConicArgs {
    /// The three diagonal coefficients a,b,c.
    #[arg(long, value_delimiter = ',', num_args = 1..=3, required = true, allow_hyphen_values = true)]
    pub coeffs: Vec<i128>,
}

#[derive(Args, Serialize)]
pub struct BundleArgs {
    /// Base coefficients a1,a2,a3 (mixed signs).
    #[arg(long, allow_hyphen_values = true)]
    pub base: String,
    /// Fiber polynomials: three ';'-separated groups, each a '|'-separated
    /// list of comma coefficient lists (constant first). Example:
    /// --groups '6,1|10,1;0,1;' puts t+6 and t+10 in group 1, t in group 2.
    #[arg(long, allow_hyphen_values = true)]
    pub groups: Option<String>,
    /// Indicator mode: explicit prime values in the same ';'/'|' layout.
    #[arg(long)]
    pub primes: Option<String>,
    /// Identity mode: check the counting identity over inputs m <= x.
    #[arg(long)]
    pub x: Option<f64>,
    /// Search mode: scan inputs up to this bound for a solvable fiber.
    #[arg(long)]
    pub bound: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub anchor: u64,
    #[arg(long, default_value_t = 1)]
    pub modulus: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Serialize)]
pub struct ChateletArgs {
    /// Norm-form coefficient a in x^2 + a y^2.
    #[arg(long, default_value_t = 1)]
    pub a: u64,
    /// Right-hand side f as comma coefficients, constant first.
    #[arg(long, allow_hyphen_values = true)]
    pub poly: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub anchor: u64,
    #[arg(long, default_value_t = 1)]
    pub modulus: u64,
    /// Scan inputs m up to this bound.
    #[arg(long, default_value_t = 10_000)]
    pub bound: u64,
    /// Proportion mode: degree of the sampled right-hand sides.
    #[arg(long)]
    pub degrees: Option<u32>,
    /// Proportion mode: coefficient height of the sampling box.
    #[arg(long, short = 'H')]
    pub height: Option<u64>,
    /// Proportion mode: number of sampled polynomials.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep one verdict per sample (implied by --format csv).
    #[arg(long)]
    pub verdicts: bool,
}

#[derive(Args, Serialize)]
pub struct ProbArgs {
    /// Exact mod-4 admissibility constant r_d for this degree.
    #[arg(long)]
    pub rd: Option<u32>,
    /// Lower bound for the solvable proportion at this degree.
    #[arg(long)]
    pub lower: Option<u32>,
    /// Truncation for the lower bound's odd-prime product.
    #[arg(long, default_value_t = 100_000)]
    pub truncation: u64,
    /// Exact Euler-factor constant c_ell at this prime (with --degrees).
    #[arg(long)]
    pub ell: Option<u64>,
    /// Degrees for c_ell.
    #[arg(long, value_delimiter = ',')]
    pub degrees: Option<Vec<u32>>,
}

/// A failure with its process exit code.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

impl From<schinzel_core::Error> for Failure {
    fn from(e: schinzel_core::Error) -> Self {
        use schinzel_core::Error;
        let code = match &e {
            Error::InvalidInput(_) | Error::Hypothesis(_) => 1,
            Error::BudgetExceeded(_) => 2,
            Error::Overflow(_) | Error::Internal(_) => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
