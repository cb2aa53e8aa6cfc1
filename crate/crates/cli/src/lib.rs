//! Command-line driver for the cohexp library.
//!
//! Exit codes: 0 on success, 2 for invalid input or flags, 3 when an
//! argument breaks a semantic precondition (such as an incoherent
//! fallback), 1 when training diverges. Every error is printed as one line
//! `error[<code>]: <message>` on standard error.

mod args;
mod commands;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;
use thiserror::Error;

pub use args::{Cli, Command, Format, SEED_ENV};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] cohexp::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(e) => e.code(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(cohexp::Error::Contract(_)) => 3,
            CliError::Core(cohexp::Error::Training { .. }) => 1,
            _ => 2,
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let config = cli.config.as_deref().map(args::read_config).transpose()?;
    let config = config.as_ref();
    match cli.command {
        Command::Check(a) => commands::check(args::merge(a, config)?),
        Command::Explain(a) => commands::explain_cmd(args::merge(a, config)?),
        Command::Repair(a) => commands::repair(args::merge(a, config)?),
        Command::DemoNoncomp(a) => commands::demo(args::merge(a, config)?),
        Command::FunctorLaw(a) => commands::functor_law(args::merge(a, config)?),
        Command::Experiment(a) => commands::experiment(args::merge(a, config)?),
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            return 2;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.code());
            e.exit_code()
        }
    }
}
