//! Command-line front end: CSV ingestion, fitting, variance reports, advice,
//! simulation and table reproduction.

mod args;
mod commands;
mod ingest;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use args::Cli;
pub use ingest::{ingest_csv, parse_csv, read_covariance, write_csv};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("line {line}, column {column} ({name}): cannot parse {cell:?} as a number")]
    Parse {
        line: u64,
        column: usize,
        name: String,
        cell: String,
    },
    #[error("response column {0:?} is not in the header")]
    MissingResponseColumn(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] delreg_core::Error),
}

impl CliError {
    /// 2 for mistakes in the invocation, 1 for everything that failed later.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::MissingResponseColumn(_) => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Parses `argv` and runs it, writing results to `out` (or `--output`) and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match commands::execute(&cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
