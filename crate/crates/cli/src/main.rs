mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, Command, FileConfig, Global};

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2.
    Config(String),
    /// Exit 3. Outputs written so far are kept.
    NonConvergence(String),
    /// Exit 4, naming the identities that failed.
    Verification(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl From<byamabe::Error> for CliError {
    fn from(e: byamabe::Error) -> Self {
        use byamabe::Error as E;
        match e {
            E::Config(m) => CliError::Config(m),
            E::Domain(_) | E::EdgeWeight { .. } => CliError::Config(e.to_string()),
            E::Numerical(_) => CliError::NonConvergence(e.to_string()),
            E::Precondition { .. } => CliError::Verification(e.to_string()),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::NonConvergence(m) => write!(f, "no convergence: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let global = Global::resolve(&cli, &file)?;
    match cli.command {
        Command::Cap(args) => commands::cap(args.merge(file.cap), &global),
        Command::Solve(args) => commands::solve(args.merge(file.solve), &global),
        Command::Sweep(args) => commands::sweep(args.merge(file.sweep), &global),
        Command::Verify(args) => commands::verify(args.merge(file.verify), &global),
        Command::Mass(args) => commands::mass(args.merge(file.mass), &global),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("byamabe: {e}");
            ExitCode::from(e.code())
        }
    }
}
