//! `rntk`: Gram matrices, kernel regression and finite-width checks for the
//! recurrent neural tangent kernel.
//!
//! Exit codes: 0 on success, 1 on a numerical failure, 2 on bad input. Errors
//! are reported as one JSON object on stderr.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rntk::Error;

use commands::{ConvergeArgs, CurveArgs, DriftArgs, GramArgs, RegressArgs, SensitivityArgs};

#[derive(Debug, Parser)]
#[command(name = "rntk", version, about = "Recurrent neural tangent kernel experiments")]
struct Cli {
    /// JSON experiment configuration; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Top-level seed; every random stream is derived from it
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Gram matrix of sequences read from CSV files
    Gram(GramArgs),
    /// Kernel ridge regression on windowed next-step prediction
    Regress(RegressArgs),
    /// Per-step sensitivity profile of the kernel
    Sensitivity(SensitivityArgs),
    /// Empirical NTK error against the analytic kernel across widths
    Converge(ConvergeArgs),
    /// Parameter and kernel drift under gradient descent across widths
    Drift(DriftArgs),
    /// Analytic and empirical kernel along a one-parameter family of inputs
    Curve(CurveArgs),
}

fn init_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("RNTK_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidParam(format!("RNTK_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidParam(format!("cannot size the thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), Error> {
    init_threads()?;
    let file = config::ExperimentConfig::load(cli.config.as_deref())?;
    let ctx = commands::Context::new(&file, cli.out, cli.seed);
    match cli.command {
        Command::Gram(a) => commands::gram(&ctx, &file, a),
        Command::Regress(a) => commands::regress(&ctx, &file, a),
        Command::Sensitivity(a) => commands::sensitivity(&ctx, &file, a),
        Command::Converge(a) => commands::converge(&ctx, &file, a),
        Command::Drift(a) => commands::drift(&ctx, &file, a),
        Command::Curve(a) => commands::curve(&ctx, &file, a),
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidParam(_) => "invalid_param",
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::LengthMismatch { .. } => "length_mismatch",
        Error::NonFinite(_) => "non_finite",
        Error::Empty(_) => "empty",
        Error::Shape(_) => "shape",
        Error::Solve(_) => "solve",
        Error::Diverged { .. } => "diverged",
        Error::Parse { .. } => "parse",
        Error::Io(_) => "io",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code: u8 = if e.is_user_error() { 2 } else { 1 };
            let report = serde_json::json!({
                "error": error_kind(&e),
                "message": e.to_string(),
                "exit_code": code,
            });
            eprintln!("{report}");
            ExitCode::from(code)
        }
    }
}
