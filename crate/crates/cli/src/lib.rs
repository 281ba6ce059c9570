//! The `elastoct` command line.

use std::ffi::OsString;
use std::process::ExitCode;

use clap::Parser;

mod args;
mod imaging;
mod stats;
mod study;

use args::{Cli, Command};

/// Exit status for flag errors caught by the parser or by cross-flag checks.
const EXIT_USAGE: u8 = 1;
/// Exit status for failures while running a command.
const EXIT_RUNTIME: u8 = 2;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(Box<dyn std::error::Error + Send + Sync>),
}

impl<E: std::error::Error + Send + Sync + 'static> From<E> for Failure {
    fn from(e: E) -> Self {
        Self::Runtime(Box::new(e))
    }
}

pub type Outcome = Result<(), Failure>;

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

pub fn runtime(msg: impl Into<String>) -> Failure {
    Failure::Runtime(msg.into().into())
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
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
    let format = cli.format;
    let result = match cli.command {
        Command::Deform(a) => imaging::deform(a, format),
        Command::Augment(a) => imaging::augment(a, format),
        Command::FieldCheck(a) => imaging::field_check(a, format),
        Command::Study(a) => study::run(a, format),
        Command::Stats(a) => stats::run(a, format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
