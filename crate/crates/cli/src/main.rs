//! `nmchain` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 invariant violation,
//! 4 unsupported request.

mod commands;
mod config;
mod output;

use std::io::{self, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{EngineArg, SideArg, TrajectoryArgs};
use config::{Format, RunArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Invariant(_) | CliError::Io(_) => 3,
            CliError::Unsupported(_) => 4,
        }
    }
}

impl From<nmchain::Error> for CliError {
    fn from(e: nmchain::Error) -> Self {
        use nmchain::Error as E;
        let text = e.to_string();
        match e {
            E::Parse(_) | E::InvalidSchedule(_) | E::Shape(_) | E::InvalidSlots(_) => CliError::Config(text),
            E::Unsupported(_)
            | E::RegisterTooLarge { .. }
            | E::BranchLimit(_)
            | E::NonContracting(_)
            | E::ClosedFormInapplicable(_) => CliError::Unsupported(text),
            E::InvalidState(_)
            | E::NotHermitian(_)
            | E::NotUnitary(_)
            | E::Incomplete(_)
            | E::NonFinite { .. }
            | E::NonOrthonormalBasis(_)
            | E::ZeroProbability { .. } => CliError::Invariant(text),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

#[derive(Parser, Debug)]
#[command(name = "nmchain", version, about = "Collision-model quantum chains with memory")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true, env = "NMCHAIN_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve a chain and print the state after every step.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "embedding")]
        engine: EngineArg,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Correlation measures of the stationary memory-system state.
    Measures {
        #[command(flatten)]
        run: RunArgs,
        /// Subsystem measured in the classical correlation.
        #[arg(long, value_enum, default_value = "memory")]
        side: SideArg,
        /// Discord above this value classifies the chain as quantum NM.
        #[arg(long, default_value_t = nmchain::measures::DEFAULT_DISCORD_THRESHOLD)]
        threshold: f64,
    },
    /// Step-by-step CP-divisibility of the reduced dynamics.
    Divisibility {
        #[command(flatten)]
        run: RunArgs,
        /// Tolerance on the smallest Choi eigenvalue.
        #[arg(long, default_value_t = nmchain::channels::DEFAULT_CP_TOL)]
        tol_cp: f64,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Selective (measured) trajectories: sampled or fully enumerated.
    Trajectories {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "embedding")]
        view: EngineArg,
        /// Enumerate every branch instead of sampling.
        #[arg(long)]
        enumerate: bool,
        /// Drop branches whose probability falls below this value.
        #[arg(long, default_value_t = 0.0)]
        prune: f64,
    },
    /// Print a built-in collision schedule as JSON.
    Schedule {
        /// One of 1a, 1b, 1d, 5.
        #[arg(long)]
        figure: String,
        #[arg(long, default_value_t = 12)]
        horizon: usize,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Simulate { run, engine, format } => commands::simulate(&run.resolve()?, engine, format, &mut out)?,
        Command::Measures { run, side, threshold } => commands::measures(&run.resolve()?, side, threshold, &mut out)?,
        Command::Divisibility { run, tol_cp, format } => {
            commands::divisibility(&run.resolve()?, tol_cp, format, &mut out)?
        }
        Command::Trajectories { run, samples, seed, view, enumerate, prune } => {
            if !(prune >= 0.0) {
                return Err(CliError::Config(format!("--prune must be non-negative, got {prune}")));
            }
            let args = TrajectoryArgs { samples, seed, enumerate, prune_below: prune, view };
            commands::trajectories(&run.resolve()?, &args, &mut out, &mut io::stderr())?
        }
        Command::Schedule { figure, horizon } => commands::schedule(&figure, horizon, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nmchain: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
