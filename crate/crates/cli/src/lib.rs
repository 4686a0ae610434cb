//! `eolopt`: optimise, estimate and simulate excess-of-loss retentions from the command line.
//!
//! Exit codes: 0 success, 1 failed self-check, 2 domain or solver failure, 64 usage,
//! 65 unreadable loss data, 74 output error.

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub mod args;
pub mod commands;
pub mod data;
pub mod format;
pub mod manifest;
pub mod selfcheck;
pub mod svg;

pub use args::Cli;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("line {line}: {message}")]
    Data { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] eol_core::Error),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
    #[error("self-check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Model(eol_core::Error::InvalidParameter { .. }) => 64,
            CliError::Data { .. } => 65,
            CliError::Model(_) => 2,
            CliError::Io(_) => 74,
            CliError::Check(_) => 1,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "UsageError",
            CliError::Data { .. } => "DataError",
            CliError::Model(e) => e.code(),
            CliError::Io(_) => "OutputError",
            CliError::Check(_) => "SelfCheckFailed",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "error": self.code(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let CliError::Data { line, .. } = self {
            v["line"] = (*line).into();
        }
        v
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
        }
    };
    // buffered so the command can run inside a worker pool
    let mut buf = Vec::new();
    let result = match cli.global.threads {
        Some(0) => Err(usage("--threads must be at least 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| commands::dispatch(&cli, &mut buf)),
            Err(e) => Err(usage(format!("cannot start {n} threads: {e}"))),
        },
        None => commands::dispatch(&cli, &mut buf),
    };
    let result = result.and_then(|()| out.write_all(&buf).map_err(CliError::from));
    if result.is_err() {
        let _ = out.write_all(&buf);
    }
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if !matches!(e, CliError::Usage(_) | CliError::Check(_)) {
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&e.to_json()).unwrap_or_default());
            }
            e.exit_code()
        }
    }
}
