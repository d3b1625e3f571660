//! `divbound` command-line front end.
//!
//! Exit codes: 0 success, 1 DPI violations or I/O failure, 2 invalid bound
//! cells under `--strict`, 64 usage errors, 65 simulation budget exceeded.

mod commands;
mod config;
mod table;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use commands::{Failure, Status};
use config::{Command, Format, RunConfig};

const EXIT_FAILURE: u8 = 1;
const EXIT_STRICT: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_BUDGET: u8 = 65;

#[derive(Debug, Parser)]
#[command(name = "divbound", version, about = "Generalized Bhattacharyya measures and Bayesian MSE lower bounds")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Load the full run configuration from a JSON file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write results here instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true, env = "DIVBOUND_WORKERS")]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Exit with status 2 if any bound cell is invalid
    #[arg(long, global = true)]
    strict: bool,
}

fn resolve(cli: Cli) -> Result<RunConfig, String> {
    let mut cfg = match (cli.config, cli.command) {
        (Some(_), Some(_)) => return Err("give either --config or a subcommand, not both".into()),
        (None, None) => return Err("a subcommand or --config is required (see --help)".into()),
        (None, Some(command)) => RunConfig {
            command,
            format: Format::default(),
            seed: 0,
            strict: false,
            output: None,
            workers: None,
        },
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
    };
    // Explicit flags override the file.
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.strict |= cli.strict;
    cfg.output = cli.output.or(cfg.output);
    cfg.workers = cli.workers.or(cfg.workers);
    if cfg.workers == Some(0) {
        return Err("--workers must be at least 1".into());
    }
    Ok(cfg)
}

fn execute(cfg: &RunConfig) -> Result<commands::Outcome, Failure> {
    match &cfg.command {
        Command::Bounds(a) => commands::bounds(a, cfg.strict),
        Command::Rd(a) => commands::rd(a),
        Command::Dpi(a) => commands::dpi(a, cfg.seed),
        Command::Simulate(a) => commands::simulate(a, cfg.seed),
    }
}

fn write_output(cfg: &RunConfig, bytes: &[u8]) -> std::io::Result<()> {
    match &cfg.output {
        Some(path) => std::fs::write(path, bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let cfg = match resolve(cli) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let outcome = match divbound::parallel::with_workers(cfg.workers, || execute(&cfg)) {
        Ok(Ok(outcome)) => outcome,
        Ok(Err(Failure::Usage(msg))) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
        Ok(Err(Failure::Budget(msg))) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_BUDGET);
        }
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    };
    let written = outcome
        .table
        .render(&cfg)
        .map_err(|e| e.to_string())
        .and_then(|bytes| write_output(&cfg, &bytes).map_err(|e| e.to_string()));
    if let Err(e) = written {
        eprintln!("error: writing output: {e}");
        return ExitCode::from(EXIT_FAILURE);
    }
    match outcome.status {
        Status::Ok => ExitCode::SUCCESS,
        Status::Invalid(n) => {
            eprintln!("strict: {n} invalid bound cell(s)");
            ExitCode::from(EXIT_STRICT)
        }
        Status::Violations(n) => {
            eprintln!("dpi: {n} violation(s) or evaluation error(s)");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
