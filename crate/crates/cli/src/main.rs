//! `matmult`: command-line front end for `matmult-core`.
//!
//! Exit codes: 0 success, 1 input error, 2 policy or validation failure,
//! 3 resource cap exceeded.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::config::Cli;

/// Failure carried to the process exit code.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Policy(String),
    Cap(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Policy(_) => 2,
            Failure::Cap(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Policy(m) | Failure::Cap(m) => m,
        }
    }
}

impl From<matmult_core::Error> for Failure {
    fn from(e: matmult_core::Error) -> Self {
        use matmult_core::Error as E;
        match e {
            E::CapExceeded { .. } => Failure::Cap(e.to_string()),
            E::IllConditioned { .. } | E::Integrity(_) | E::NonFinite { .. } => {
                Failure::Policy(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Err(f) = configure_threads() {
        eprintln!("error: {}", f.message());
        return ExitCode::from(f.code());
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("MATMULT_THREADS") else {
        return Ok(());
    };
    let n: usize = value.trim().parse().map_err(|_| {
        Failure::Input(format!(
            "MATMULT_THREADS must be a positive integer, got {value:?}"
        ))
    })?;
    if n == 0 {
        return Err(Failure::Input("MATMULT_THREADS must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Input(e.to_string()))
}
