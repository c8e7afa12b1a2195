//! `cascade`: run, compare, validate and generate interbank cascade scenarios.
//!
//! Exit codes: 0 success, 2 configuration or I/O error, 3 system validation
//! failure, 4 non-convergence, 5 incompatible runs, 70 internal error.
//! Errors are reported as one JSON object on standard error.

mod compare;
mod config;
mod error;
mod output;
mod run;

use std::path::{Path, PathBuf};

use cascade_core::io::{parse_system, system_to_json};
use cascade_core::scenario::{build_trigger, generate_system, BalanceSheetSpec, NetworkSpec, TriggerSpec};
use cascade_core::{apply_trigger, validate_nominal, validate_system, DEFAULT_TOL};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::output::{resolve, Artifacts};

/// Environment variable holding the number of worker threads.
const WORKERS_VAR: &str = "CASCADE_WORKERS";

#[derive(Parser)]
#[command(name = "cascade", version, about = "Stock-flow consistent interbank contagion simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulation (or Monte Carlo grid) described by a config file.
    Run { config: PathBuf },
    /// Run two configs and print per-bank differences (second minus first) as CSV.
    Compare { a: PathBuf, b: PathBuf },
    /// Check a system file against the accounting constraints.
    Validate { system: PathBuf },
    /// Generate a random system from a generator spec.
    Generate { spec: PathBuf },
}

/// Input of `generate`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateSpec {
    version: u32,
    network: NetworkSpec,
    #[serde(default)]
    balance_sheets: BalanceSheetSpec,
    /// Apply this trigger and emit the post-trigger system.
    #[serde(default)]
    trigger: Option<TriggerSpec>,
    /// Write exposures as a triplet list instead of a dense matrix.
    #[serde(default)]
    sparse: bool,
    /// Output path; standard output when absent.
    #[serde(default)]
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct ValidateReport {
    valid: bool,
    /// Also satisfies the nominal (pre-trigger) constraints `C, E >= 0`.
    nominal: bool,
    n_banks: usize,
    violations: Vec<cascade_core::Violation>,
}

fn configure_workers() -> Result<()> {
    let Ok(raw) = std::env::var(WORKERS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{WORKERS_VAR} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("{WORKERS_VAR}: {e}")))?;
    log::debug!("using {n} worker threads");
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn validate(path: &Path) -> Result<String> {
    let system = parse_system(&read(path)?)?;
    let report = validate_system(&system, DEFAULT_TOL)?;
    let nominal = validate_nominal(&system, DEFAULT_TOL)?.is_valid();
    let out = ValidateReport {
        valid: report.is_valid(),
        nominal,
        n_banks: system.n_banks(),
        violations: report.violations,
    };
    let text = serde_json::to_string_pretty(&out).expect("plain data serializes");
    if out.valid {
        Ok(text)
    } else {
        println!("{text}");
        Err(CliError::Validation(format!("{} violations", out.violations.len())))
    }
}

fn generate(path: &Path) -> Result<String> {
    let spec: GenerateSpec =
        serde_json::from_str(&read(path)?).map_err(|e| CliError::Config(format!("generator spec: {e}")))?;
    if spec.version != config::CONFIG_VERSION {
        return Err(CliError::Config(format!(
            "unsupported generator spec version {} (expected {})",
            spec.version,
            config::CONFIG_VERSION
        )));
    }
    let mut system = generate_system(&spec.network, &spec.balance_sheets)?;
    if let Some(t) = &spec.trigger {
        let shock = build_trigger(&system, t, spec.network.seed)?;
        system = apply_trigger(&system, &shock)?;
    }
    let mut json = system_to_json(&system, spec.sparse);
    json.push('\n');
    match &spec.output {
        Some(out) => {
            let base = path.parent().unwrap_or(Path::new("."));
            let mut artifacts = Artifacts::default();
            artifacts.add(resolve(base, out), json.into_bytes());
            artifacts.commit()?;
            Ok(String::new())
        }
        None => Ok(json),
    }
}

fn dispatch(cli: Cli) -> Result<String> {
    configure_workers()?;
    match cli.command {
        Command::Run { config } => run::run(&config),
        Command::Compare { a, b } => compare::compare(&a, &b),
        Command::Validate { system } => validate(&system),
        Command::Generate { spec } => generate(&spec),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(text) => {
            if !text.is_empty() {
                print!("{text}");
                if !text.ends_with('\n') {
                    println!();
                }
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            std::process::exit(e.exit_code());
        }
    }
}
