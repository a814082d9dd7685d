//! `pauliest`: experiment harness for Pauli error-rate estimation.

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pauliest::Error;
use serde::Serialize;

use pauliest_cli::commands::*;
use pauliest_cli::config::ExperimentConfig;
use pauliest_cli::manifest::RunDir;

#[derive(Debug, Parser)]
#[command(
    name = "pauliest",
    version,
    about = "Estimate Pauli error rates from SPAM-noisy probes"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print and save the weight-transition matrix of a binary channel.
    Amatrix(AmatrixArgs),
    /// Simulate a batch of random nontrivial probes.
    Simulate(SimulateArgs),
    /// Estimate the probability of one Pauli string.
    Individual(IndividualArgs),
    /// Recover the whole error-rate distribution.
    Recover(RecoverArgs),
    /// Evaluate the η quantities for a ZFlip channel.
    Eta(EtaArgs),
    /// Planned budgets and estimator norms over a parameter grid.
    Bench(BenchArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Amatrix(_) => "amatrix",
            Command::Simulate(_) => "simulate",
            Command::Individual(_) => "individual",
            Command::Recover(_) => "recover",
            Command::Eta(_) => "eta",
            Command::Bench(_) => "bench",
        }
    }
}

#[derive(Serialize)]
struct ErrorRecord {
    error: &'static str,
    message: String,
    hint: String,
    exit_code: u8,
}

fn record(e: &Error) -> ErrorRecord {
    let (error, exit_code, hint) = match e {
        Error::LengthMismatch { .. } => (
            "length-mismatch",
            2,
            "check that all strings have n symbols".into(),
        ),
        Error::InvalidSymbol(_) => ("invalid-symbol", 2, "Pauli strings use I, X, Y, Z".into()),
        Error::InvalidDistribution(_) => (
            "invalid-distribution",
            2,
            "probabilities must be nonnegative and sum to 1".into(),
        ),
        Error::InvalidParameter(_) => (
            "invalid-parameter",
            2,
            "see --help for accepted ranges".into(),
        ),
        Error::TooLarge { .. } => ("too-large", 2, "reduce n".into()),
        Error::Parse(_) => ("parse", 2, "check the input file format".into()),
        Error::Pole(_) => (
            "pole",
            3,
            "choose evaluation points away from the pole".into(),
        ),
        Error::Numeric { hint, .. } => ("numeric", 3, hint.clone()),
        Error::Infeasible(_) => (
            "infeasible",
            3,
            "loosen epsilon or use a different estimator policy".into(),
        ),
        Error::Io(_) => ("io", 1, "check paths and permissions".into()),
    };
    ErrorRecord {
        error,
        message: e.to_string(),
        hint,
        exit_code,
    }
}

fn fail(rec: ErrorRecord) -> ExitCode {
    eprintln!(
        "{}",
        serde_json::to_string(&rec).unwrap_or_else(|_| rec.message.clone())
    );
    ExitCode::from(rec.exit_code)
}

fn run(cli: Cli) -> pauliest::Result<String> {
    if let Some(t) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("threads: {e}")))?;
    }
    let cfg = match &cli.common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let mut run = None::<RunDir>;
    let common = &cli.common;
    let outcome = match &cli.command {
        Command::Amatrix(a) => run_amatrix(a, cfg, &mut run, common),
        Command::Simulate(a) => run_simulate(a, cfg, &mut run, common),
        Command::Individual(a) => run_individual(a, cfg, &mut run, common),
        Command::Recover(a) => run_recover(a, cfg, &mut run, common),
        Command::Eta(a) => run_eta(a, cfg, &mut run, common),
        Command::Bench(a) => run_bench(a, cfg, &mut run, common),
    }?;
    if let Some(dir) = run {
        dir.finish(cli.command.name(), &outcome.config, outcome.timing)?;
    }
    Ok(outcome.stdout)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            return fail(ErrorRecord {
                error: "usage",
                message: e.to_string().trim_end().to_string(),
                hint: "run with --help".into(),
                exit_code: 2,
            })
        }
    };
    match run(cli) {
        Ok(stdout) => {
            println!("{stdout}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(record(&e)),
    }
}
