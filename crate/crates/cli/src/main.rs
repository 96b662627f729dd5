//! Scenario-driven front end for the mean-field-game solvers.
//!
//! Subcommands:
//!
//! * `stationary` — multi-start search for stationary equilibria;
//! * `evolve`     — time-dependent solve with energy diagnostics;
//! * `criteria`   — uniqueness criteria for the configured kernel;
//! * `sweep`      — coupling-strength sweep tracing the synchronization onset;
//! * `verify`     — the self-check suite, as JUnit XML plus a text summary.
//!
//! Exit codes: 0 on success, 1 when a solve or a checked invariant fails
//! numerically, 2 for configuration problems. Identical config and seed
//! give byte-identical outputs.

mod config;
mod run;

use clap::{Args, Parser, Subcommand};
use config::ScenarioConfig;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

/// Everything that can go wrong, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unusable configuration or input files: exit code 2.
    Config(String),
    /// Failure inside the numerical core; non-convergence and blow-ups
    /// exit with 1, structural problems with 2.
    Core(mfg_core::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(message) => write!(f, "{message}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<mfg_core::Error> for CliError {
    fn from(e: mfg_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(mfg_core::Error::from(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                mfg_core::Error::DidNotConverge { .. }
                | mfg_core::Error::BlowUp { .. }
                | mfg_core::Error::ExcessiveClipping { .. } => 1,
                _ => 2,
            },
        }
    }
}

#[derive(Parser)]
#[command(
    name = "mfg",
    version,
    about = "Mean-field games on the torus: solvers, diagnostics, verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find stationary equilibria by multi-start fixed-point iteration.
    Stationary(RunArgs),
    /// Solve the time-dependent system and export trajectory diagnostics.
    Evolve(RunArgs),
    /// Evaluate the uniqueness criteria for the configured kernel.
    Criteria(CriteriaArgs),
    /// Sweep the coupling strength and trace the synchronization onset.
    Sweep(SweepArgs),
    /// Run the self-check suite; write JUnit XML and a text summary.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file, TOML by default (a .json extension switches to JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the one in the scenario file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for everything randomized.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads for independent tasks (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct CriteriaArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Density table (CSV) to evaluate the heat-flow bound at; repeatable.
    #[arg(long = "density")]
    densities: Vec<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Coupling strengths to sweep; repeatable or comma-separated.
    #[arg(long = "kappa", value_delimiter = ',')]
    kappas: Vec<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Output directory for verify.xml and verify.txt.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of the randomized checks.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn load_and_out(args: &RunArgs) -> Result<Option<(ScenarioConfig, PathBuf)>, CliError> {
    let cfg = ScenarioConfig::load(args.config.as_deref())?;
    if args.print_config {
        print!("{}", cfg.to_toml()?);
        return Ok(None);
    }
    let out = args.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    Ok(Some((cfg, out)))
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Stationary(args) => match load_and_out(&args)? {
            None => Ok(0),
            Some((cfg, out)) => run::cmd_stationary(&cfg, &out, args.jobs),
        },
        Command::Evolve(args) => match load_and_out(&args)? {
            None => Ok(0),
            Some((cfg, out)) => run::cmd_evolve(&cfg, &out),
        },
        Command::Criteria(args) => match load_and_out(&args.run)? {
            None => Ok(0),
            Some((cfg, out)) => run::cmd_criteria(&cfg, &out, &args.densities),
        },
        Command::Sweep(args) => match load_and_out(&args.run)? {
            None => Ok(0),
            Some((cfg, out)) => run::cmd_sweep(&cfg, &out, &args.kappas, args.run.jobs),
        },
        Command::Verify(args) => {
            let out = args.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            run::cmd_verify(&out, args.seed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
