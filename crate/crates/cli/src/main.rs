//! Command-line experiment runner.
//!
//! Exit codes: 0 success (or Certified), 1 Falsified or a failed check,
//! 2 configuration error (or Unknown for the certify commands), 3 runtime
//! error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use commands::{Command, RunError};
use config::{Config, Overrides};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "holodyn", version, about = "Experiments on the saddle measure of holomorphic maps of the projective plane")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML or JSON config; keys are the long flag names with underscores.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the result JSON, tables and the resolved config.
    #[arg(long, global = true, default_value = "holodyn-out")]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

fn threads() -> Result<Option<usize>, String> {
    match std::env::var("HOLODYN_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("HOLODYN_THREADS must be a positive integer, got {s:?}")),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match threads() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    let cfg = match Config::resolve(cli.config.as_deref(), &cli.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let name = cli.command.name();
    let outcome = match commands::run(cli.command, &cfg) {
        Ok(o) => o,
        Err(RunError::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(RunError::Runtime(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    let build = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "parallel": holodyn::par::is_parallel(),
        "threads": threads,
    });
    let config = serde_json::to_value(&cfg).expect("config serializes");
    if let Err(e) = output::write_all(&cli.out, name, &config, &build, &outcome) {
        eprintln!("error: writing {}: {e}", cli.out.display());
        return ExitCode::from(EXIT_RUNTIME);
    }
    println!("{}", serde_json::to_string_pretty(&outcome.result).expect("result serializes"));
    ExitCode::from(outcome.code as u8)
}
