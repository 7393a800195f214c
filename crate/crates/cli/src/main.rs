#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Params;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(envloc::Error),
    Io(std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(e) if e.is_numerical() => 3,
            CliError::Lib(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage: {msg}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl From<envloc::Error> for CliError {
    fn from(e: envloc::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Channel-position finding: fidelity bounds, photon-counting MLE and Monte Carlo checks.
#[derive(Debug, Parser)]
#[command(name = "envloc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Finite-squeezing, Choi-limit and classical fidelities of the channel pair.
    Fidelity(#[command(flatten)] Params),
    /// Quantum and classical error bounds over a probe range.
    Bounds(#[command(flatten)] Params),
    /// Advantage condition and the probe counts where the quantum protocol wins.
    Advantage(#[command(flatten)] Params),
    /// Advantage mask over an (eps_dif, eps_av) grid at fixed tau.
    Region(#[command(flatten)] Params),
    /// Exact error of the photon-counting maximum-likelihood protocol.
    Mle(#[command(flatten)] Params),
    /// Monte Carlo estimate of the maximum-likelihood error.
    Simulate(#[command(flatten)] Params),
    /// Bounds and MLE errors together, one row per probe count.
    Figure(#[command(flatten)] Params),
}

type CommandFn = fn(&mut Params) -> Result<output::Report, CliError>;

fn run(cli: Cli) -> Result<(), CliError> {
    let (run, flags): (CommandFn, Params) = match cli.command {
        Command::Fidelity(p) => (commands::fidelity, p),
        Command::Bounds(p) => (commands::bounds, p),
        Command::Advantage(p) => (commands::advantage, p),
        Command::Region(p) => (commands::region, p),
        Command::Mle(p) => (commands::mle, p),
        Command::Simulate(p) => (commands::simulate, p),
        Command::Figure(p) => (commands::figure, p),
    };
    let mut params = Params::resolve(flags)?;
    commands::fill_common_defaults(&mut params);
    let report = run(&mut params)?;
    output::emit(&report, &mut params)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
