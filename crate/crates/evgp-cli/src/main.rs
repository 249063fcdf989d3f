//! `evgp` command line: simulate dynamical systems into one-step
//! regression datasets, train sparse variational GP models with
//! physics priors, evaluate them, run benchmark matrices, and inspect
//! learned feature weights.
//!
//! Exit codes: 0 on success, 2 for configuration/validation problems,
//! 3 for numerical failures (factorization, divergence, simulation
//! blow-up).

mod args;
mod commands;

use clap::Parser;

use args::{Cli, Command};

/// Error carrying the process exit code.
pub(crate) struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<evgp::Error> for CliError {
    fn from(e: evgp::Error) -> Self {
        Self {
            code: if e.is_numerical() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: 2,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self {
            code: 2,
            message: format!("config/file parse error: {e}"),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate::run(a),
        Command::Train(a) => commands::train::run(a),
        Command::Evaluate(a) => commands::evaluate::run(a),
        Command::Bench(a) => commands::bench::run(a),
        Command::Inspect(a) => commands::inspect::run(a),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}
