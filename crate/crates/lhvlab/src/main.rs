use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lhvlab::config::{Command, Format, RunConfig};

/// Local hidden-variable models for noisy entangled states: threshold
/// tables and Monte Carlo verification.
#[derive(Debug, Parser)]
#[command(name = "lhvlab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Comma-separated local dimensions.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Monte Carlo samples per case.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pass threshold in standard errors.
    #[arg(long = "sigma-tol", default_value_t = 5.0)]
    sigma_tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Samples per reproducibility chunk.
    #[arg(long, default_value_t = lhv_core::montecarlo::DEFAULT_CHUNK_SIZE)]
    chunk_size: u64,
    /// Random cases per dimension.
    #[arg(long, default_value_t = 3)]
    cases: usize,
    /// See-saw restarts for verify-chsh.
    #[arg(long, default_value_t = 20)]
    restarts: usize,
}

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let mut cfg = RunConfig::new(cli.command);
    if let Some(dims) = cli.dims {
        cfg.dims = dims;
    }
    cfg.samples = cli.samples;
    cfg.seed = cli.seed;
    cfg.sigma_tolerance = cli.sigma_tol;
    cfg.format = cli.format;
    cfg.output_path = cli.out;
    cfg.chunk_size = cli.chunk_size;
    cfg.cases = cli.cases;
    cfg.restarts = cli.restarts;

    if let Err(msg) = cfg.validate() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    let report = match lhvlab::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let text = report.render(cfg.format);
    match &cfg.output_path {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(EXIT_USAGE);
            }
        }
        None => print!("{text}"),
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        eprintln!(
            "{} of {} cases failed",
            report.summary.failures, report.summary.cases
        );
        ExitCode::from(EXIT_FAIL)
    }
}
