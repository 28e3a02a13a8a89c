//! The `ost` command-line tool: transcription, toy experiments, evaluation,
//! hyper-parameter sweeps and benchmarks on top of `ost-core`.

pub mod args;
pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::fmt;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::{Cli, Command};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(ost_core::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        use ost_core::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => match e {
                E::InvalidParameter(_) | E::InvalidStft(_) => EXIT_USAGE,
                E::Io { .. }
                | E::UnreadableWav { .. }
                | E::UnsupportedEncoding(_)
                | E::EmptyAudio
                | E::DimensionMismatch(_)
                | E::Parse { .. } => EXIT_DATA,
                E::Infeasible | E::Unbounded | E::GuardExceeded { .. } | E::Numeric(_) => EXIT_NUMERIC,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ost_core::Error> for CliError {
    fn from(e: ost_core::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parse `argv` (config file first, flags on top), run the command and
/// return its stdout text.
pub fn execute(argv: Vec<OsString>) -> CliResult<String> {
    let argv = config::expand(argv)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => return Ok(e.render().to_string()),
            _ => return Err(CliError::Usage(e.render().to_string())),
        },
    };
    commands::dispatch(&cli)
}

/// Entry point for the binary; returns the process exit code.
pub fn run(argv: impl IntoIterator<Item = OsString>) -> i32 {
    match execute(argv.into_iter().collect()) {
        Ok(out) => {
            print!("{out}");
            EXIT_OK
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("error: {}", msg.trim_start_matches("error: ").trim_end());
            e.exit_code()
        }
    }
}
