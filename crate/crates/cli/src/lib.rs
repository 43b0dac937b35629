//! Command-line front-end for the `spatial-risk` library.
//!
//! Every command reads an optional JSON configuration, computes, prints a
//! short report and, where it produces a table, writes CSV to `--out` (or
//! stdout when no path is given).

pub mod commands;
pub mod config;
pub mod error;
pub mod table;
pub mod validate;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::ExperimentConfig;
pub use error::CliError;
pub use table::Table;

#[derive(Debug, Parser)]
#[command(name = "spatial-risk", version, about = "Spatial risk measures for Gaussian random fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// CSV output path.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Absolute quadrature tolerance, overriding the configuration.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Risk measure (R0, R1) of one region by quadrature.
    Risk,
    /// Sweep of G or R1 along one parameter, per correlation family.
    Curve,
    /// Monte Carlo estimate, relative-error study or sub-additivity check.
    Mc,
    /// Cross-checks closed forms against independent oracles.
    Validate {
        /// Test hook: makes every tolerance impossible to meet.
        #[arg(long, hide = true)]
        corrupt_tolerance: bool,
    },
    /// PM10 case study with published values alongside.
    Piemonte,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Risk => "risk",
            Command::Curve => "curve",
            Command::Mc => "mc",
            Command::Validate { .. } => "validate",
            Command::Piemonte => "piemonte",
        }
    }
}

/// What a command produced.
#[derive(Debug)]
pub struct Output {
    pub report: String,
    pub table: Option<Table>,
    /// Print the table to stdout when no `--out` is given.
    pub table_to_stdout: bool,
    /// Set when a check failed; the output is still written.
    pub failure: Option<String>,
}

/// Runs a parsed invocation, writing the report to `stdout`.
pub fn run(cli: &Cli, stdout: &mut impl std::io::Write) -> Result<(), CliError> {
    if let Some(tol) = cli.tolerance {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Config(format!("--tolerance must be positive, got {tol}")));
        }
    }
    let config = match &cli.config {
        Some(path) => Some(config::load(path)?),
        None => None,
    };
    if let Some(cfg) = &config {
        if cfg.command() != cli.command.name() {
            return Err(CliError::Config(format!(
                "configuration holds a `{}` record but the command is `{}`",
                cfg.command(),
                cli.command.name()
            )));
        }
    }
    let pool = match cli.threads {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| CliError::Config(format!("cannot start worker threads: {e}")))?;

    let output = pool.install(|| commands::dispatch(cli, config))?;

    write!(stdout, "{}", output.report)?;
    if let Some(table) = &output.table {
        match &cli.out {
            Some(path) => table.write(path)?,
            None if output.table_to_stdout => write!(stdout, "{}", table.to_csv()?)?,
            None => {}
        }
    }
    match output.failure {
        Some(msg) => Err(CliError::Validation(msg)),
        None => Ok(()),
    }
}
