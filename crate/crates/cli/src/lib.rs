//! Command-line front end: argument parsing, run dispatch and artifact output.

pub mod args;
pub mod commands;
pub mod output;
pub mod validate;

use serde::Serialize;
use subvoter_core::{Error, VERSION};

use crate::args::{Cli, TopCommand};

/// Process exit status for a failed run.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::CapExceeded { .. } | Error::SizeGuard { .. } => 3,
        Error::Censored { .. } => 4,
        Error::Io(_) | Error::Numerical(_) => 1,
        _ => 2,
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: String,
    pub message: String,
    pub exit_code: i32,
    pub version: &'static str,
}

impl ErrorRecord {
    pub fn new(kind: &str, message: String, exit_code: i32) -> Self {
        Self { error: kind.to_string(), message, exit_code, version: VERSION }
    }

    pub fn from_error(e: &Error) -> Self {
        let kind = match e {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::NotSubcritical { .. } => "not-subcritical",
            Error::VertexOutOfRange { .. } => "vertex-out-of-range",
            Error::SelfPair(_) => "self-pair",
            Error::CapExceeded { .. } => "cap-exceeded",
            Error::SizeGuard { .. } => "size-guard",
            Error::Numerical(_) => "numerical",
            Error::Censored { .. } => "censored",
            Error::Disconnected => "disconnected",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        };
        Self::new(kind, e.to_string(), exit_code(e))
    }
}

/// Runs a parsed command line and returns the exit status.
pub fn run(cli: Cli) -> i32 {
    if let Some(t) = cli.threads {
        // A second call in the same process keeps the first pool, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    let result = match &cli.command {
        TopCommand::Run(cfg) => commands::run(cfg),
        TopCommand::Validate { target } => {
            let v = validate::validate(target);
            let text = output::json(target, &v);
            match text.and_then(|t| output::emit(target.output().out.as_deref(), &t)) {
                Ok(()) if v.valid => return 0,
                Ok(()) => return 2,
                Err(e) => Err(e),
            }
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let rec = ErrorRecord::from_error(&e);
            eprintln!("{}", serde_json::to_string(&rec).expect("error record serializes"));
            rec.exit_code
        }
    }
}
