//! `bpc`: generate data, classify the Toeplitz regime, solve total-variation
//! recovery, and run the B-spline grid solver and its convergence benchmark.

mod commands;
mod io;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit code for a successful run with a unique solution.
pub const EXIT_OK: u8 = 0;
/// Bad input, unreadable files or violated preconditions.
pub const EXIT_INPUT: u8 = 2;
/// The solution set is not a single measure.
pub const EXIT_NOT_UNIQUE: u8 = 10;
/// A numerical routine failed.
pub const EXIT_SOLVER: u8 = 20;

#[derive(Parser)]
#[command(
    name = "bpc",
    version,
    about = "Total-variation recovery from low-frequency Fourier data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a measure and its Fourier observations.
    Generate(GenerateArgs),
    /// Report the spectral regime of the Toeplitz matrix of the data.
    Classify(ClassifyArgs),
    /// Solve the minimization and report the solution set.
    Solve(SolveArgs),
    /// Solve the penalized D^M problem on a uniform B-spline grid.
    GridSolve(GridSolveArgs),
    /// Measure grid-solver error against grid size.
    BenchConvergence(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Alternating unit masses at the 2·kc-th roots of unity.
    Alternating,
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "source")]
struct Source {
    /// Explicit atoms as "x:a,x:a,...".
    #[arg(long)]
    atoms: Option<String>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Random nonnegative measure with this many atoms.
    #[arg(long, value_name = "K")]
    random_nonneg: Option<usize>,
    /// Random measure of mixed sign with this many atoms.
    #[arg(long, value_name = "K")]
    random_signed: Option<usize>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    kc: usize,
    #[arg(long, env = "BPC_SEED", default_value_t = 0)]
    seed: u64,
    /// Write measure.json and y.json here instead of printing a bundle.
    #[arg(long, short = 'o')]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    y_file: PathBuf,
    /// Absolute eigenvalue threshold (default: relative 1e-9).
    #[arg(long)]
    tol_eig: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    y_file: PathBuf,
    /// Verify the certificate and report the check.
    #[arg(long)]
    certify: bool,
    /// Also solve the gridded linear program and report the gap.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    tol_eig: Option<f64>,
}

#[derive(Args)]
struct GridSolveArgs {
    y_file: PathBuf,
    /// Derivative order of the regularizer.
    #[arg(long)]
    m: usize,
    /// Number of grid points.
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 1e-7)]
    lambda: f64,
    /// Reconstruction samples on [0, 2π).
    #[arg(long, default_value_t = 512)]
    samples: usize,
    /// Write the iteration trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReferenceArg {
    /// The certified continuous-domain minimizer for the same data.
    Minimizer,
    /// The randomly drawn spline.
    Truth,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 3)]
    kc: usize,
    #[arg(long, default_value_t = 1e-7)]
    lambda: f64,
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256,512")]
    p_list: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    runs: usize,
    #[arg(long, default_value_t = 2)]
    knots: usize,
    #[arg(long, env = "BPC_SEED", default_value_t = 0)]
    seed: u64,
    /// Which function the CSV errors are measured against.
    #[arg(long, value_enum, default_value = "minimizer")]
    reference: ReferenceArg,
    /// CSV path; a JSON summary is written next to it. Without it the CSV
    /// goes to stdout.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

/// Failure classified by exit code.
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_INPUT,
            error: error.into(),
        }
    }
}

impl From<bpc_core::Error> for Failure {
    fn from(e: bpc_core::Error) -> Self {
        use bpc_core::Error as E;
        let code = match e {
            E::InvalidInput(_) | E::ValidationFailure(_) => EXIT_INPUT,
            _ => EXIT_SOLVER,
        };
        Self {
            code,
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self::input(error)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Classify(a) => commands::classify(a),
        Command::Solve(a) => commands::solve(a),
        Command::GridSolve(a) => commands::grid_solve(a),
        Command::BenchConvergence(a) => commands::bench(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
