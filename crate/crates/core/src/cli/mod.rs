//! Command-line front end.

pub mod config;
pub mod run;

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{ConfigError, Experiment, ExperimentConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_ORACLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "photonsub",
    version,
    about = "Fidelities and heralding probabilities for photon subtraction from Gaussian states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Experiment file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output path; defaults to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Fill the oracle columns even if the config leaves the oracle disabled.
    #[arg(long, global = true)]
    pub oracle: bool,

    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fidelity report at the configured point.
    Fidelity,
    /// Analytic bounds only.
    Bound,
    /// Heralding probabilities for every pattern up to a photon cap.
    Prob {
        #[arg(long, default_value_t = 4)]
        max_photons: u32,
    },
    /// Table over the configured sweep.
    Sweep,
    /// Compare kernel, Fock and closed-form paths; the built-in grid is used without --config.
    OracleCheck,
    /// Grid search over generators, squeezing, transmissivity and patterns.
    Search,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] crate::Error),
    #[error("output error: {0}")]
    Io(#[from] io::Error),
    #[error("oracle disagreement on {0} case(s)")]
    Oracle(usize),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_PARSE,
            CliError::Numerical(_) | CliError::Io(_) => EXIT_NUMERICAL,
            CliError::Oracle(_) => EXIT_ORACLE,
        }
    }
}

fn load(cli: &Cli) -> Result<Experiment, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("this subcommand needs --config <path>".into()))?;
    Ok(ExperimentConfig::from_path(path)?.validate()?)
}

fn output(cli: &Cli) -> Result<Box<dyn Write>, CliError> {
    Ok(match &cli.out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        // A second initialisation (e.g. in tests) keeps the existing pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match &cli.command {
        Command::Fidelity => {
            let exp = load(cli)?;
            let row = run::run_point(&exp, cli.oracle)?;
            run::write_rows(&[row], output(cli)?)?;
        }
        Command::Bound => {
            let exp = load(cli)?;
            let b = run::run_bound(&exp)?;
            run::write_bound(&b, output(cli)?)?;
        }
        Command::Prob { max_photons } => {
            let exp = load(cli)?;
            let rows = run::run_prob(&exp, *max_photons)?;
            run::write_prob(&rows, output(cli)?)?;
        }
        Command::Sweep => {
            let exp = load(cli)?;
            if exp.sweep.is_none() {
                return Err(CliError::Usage("the config has no [sweep] section".into()));
            }
            let rows = run::run_sweep(&exp, cli.oracle)?;
            run::write_rows(&rows, output(cli)?)?;
        }
        Command::OracleCheck => {
            let rows = match &cli.config {
                Some(_) => run::experiment_oracle_check(&load(cli)?)?,
                None => run::default_oracle_grid(30)?,
            };
            run::write_oracle(&rows, output(cli)?)?;
            let bad = rows
                .iter()
                .filter(|r| {
                    let d = r.max_deviation();
                    d.is_nan() || d >= run::ORACLE_TOLERANCE
                })
                .count();
            if bad > 0 {
                return Err(CliError::Oracle(bad));
            }
        }
        Command::Search => {
            let exp = load(cli)?;
            if exp.search.is_none() {
                return Err(CliError::Usage("the config has no [search] section".into()));
            }
            let hits = run::run_search(&exp)?;
            run::write_search(&hits, output(cli)?)?;
        }
    }
    Ok(())
}

/// Runs the CLI and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
