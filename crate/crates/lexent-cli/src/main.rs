//! Command-line driver wiring the lexent pipeline: build vector spaces, run
//! cross-validated evaluations, ablations and iteration sweeps, inspect
//! fitted detectors, and generate synthetic fixtures.
//!
//! Every run settles its effective configuration (JSON config file, then
//! flag overrides) and echoes it to `<out>/config.echo.json`, so any result
//! directory can be reproduced with `--config <out>/config.echo.json`.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on config or usage
//! errors (clap uses 2 for flag errors on its own).

mod commands;
mod config;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Bad or missing configuration; maps to exit code 2.
    Usage(String),
    /// Failure while doing the work; maps to exit code 1.
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn usage(msg: impl Into<String>) -> CliError {
        CliError::Usage(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Runtime(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<lexent::Error> for CliError {
    fn from(e: lexent::Error) -> CliError {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "lexent",
    version,
    about = "Supervised lexical entailment over distributional vectors"
)]
struct Cli {
    /// Worker threads for fold-parallel work (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a PPMI+SVD vector space from a counts TSV.
    BuildSpace(commands::BuildSpaceArgs),
    /// Cross-validate models over a labeled pair dataset.
    Evaluate(commands::EvaluateArgs),
    /// Sweep feature-group ablations of the iterative model.
    Ablate(commands::AblateArgs),
    /// Sweep the detector iteration count.
    SweepIterations(commands::SweepArgs),
    /// Fit on the full dataset and report per-iteration detector contexts.
    Analyze(commands::AnalyzeArgs),
    /// Generate a synthetic corpus and pair fixture.
    Synth(commands::SynthArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::BuildSpace(args) => commands::build_space(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Ablate(args) => commands::ablate(args),
        Command::SweepIterations(args) => commands::sweep_iterations(args),
        Command::Analyze(args) => commands::analyze(args),
        Command::Synth(args) => commands::synth(args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
