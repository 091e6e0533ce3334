//! Command-line runner: executes verification scenarios against built-in
//! models or scenario files and emits human-readable or line-delimited
//! JSON reports.
//!
//! Exit status: 0 when every task verdict is `pass`, 1 when any task fails
//! or ends inconclusive, 2 on load, parse or execution errors.

use clap::{Parser, Subcommand, ValueEnum};
use reeb_core::scenario::{
    load_builtin, load_path, model_catalog, run_scenario, scenario_catalog, RunConfig, RunOutcome,
    Scenario, ScenarioError,
};
use reeb_core::Verdict;
use std::path::Path;
use std::process::ExitCode;

/// Environment variable overriding the default per-axis grid sample count.
const GRID_ENV: &str = "REEB_GRID";

#[derive(Parser)]
#[command(
    name = "reeb",
    version,
    about = "Verify contact, confoliation and connection structures on chart-based manifold models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Aligned human-readable table.
    Pretty,
    /// One JSON record per task (machine readable, byte-deterministic).
    Records,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in scenario or a scenario file (.scn / .toml)
    Run {
        /// Built-in scenario name (see `reeb list`) or path to a scenario file
        target: String,
        /// Per-axis grid samples (overrides the scenario and REEB_GRID)
        #[arg(long)]
        grid: Option<usize>,
        /// Residual tolerance override
        #[arg(long)]
        tol: Option<f64>,
        /// Seed for randomized suites
        #[arg(long)]
        seed: Option<u64>,
        /// Report format
        #[arg(long, value_enum, default_value_t = Format::Pretty)]
        format: Format,
    },
    /// List built-in scenarios and models
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            target,
            grid,
            tol,
            seed,
            format,
        } => run(&target, grid, tol, seed, format),
        Command::List => {
            list();
            ExitCode::SUCCESS
        }
    }
}

fn load_target(target: &str) -> Result<Scenario, ScenarioError> {
    if let Some(scenario) = load_builtin(target) {
        return Ok(scenario);
    }
    load_path(Path::new(target))
}

fn grid_from_env() -> Option<usize> {
    std::env::var(GRID_ENV).ok().and_then(|v| v.parse().ok())
}

fn run(
    target: &str,
    grid: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
    format: Format,
) -> ExitCode {
    let scenario = match load_target(target) {
        Ok(s) => s,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(2);
        }
    };
    let config = RunConfig {
        grid_samples: grid.or_else(grid_from_env),
        tolerance: tol,
        seed,
    };
    let outcome = match run_scenario(&scenario, &config) {
        Ok(o) => o,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(2);
        }
    };
    match format {
        Format::Records => print_records(&outcome),
        Format::Pretty => print_pretty(&outcome),
    }
    if outcome.all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn print_records(outcome: &RunOutcome) {
    for record in &outcome.records {
        println!(
            "{}",
            serde_json::to_string(record).expect("records serialize")
        );
    }
}

fn print_pretty(outcome: &RunOutcome) {
    println!(
        "scenario {}: {} task(s)",
        outcome.scenario,
        outcome.records.len()
    );
    for record in &outcome.records {
        let verdict = match record.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "inconclusive",
        };
        let margin = record
            .detail
            .get("margin")
            .and_then(|m| m.as_f64())
            .map(|m| format!("  margin {m:.3e}"))
            .unwrap_or_default();
        println!(
            "  [{:>2}] {:<12} {:<42} {}{}",
            record.index, verdict, record.op, record.target, margin
        );
    }
    println!(
        "result: {}",
        if outcome.all_passed {
            "all tasks passed"
        } else {
            "FAILURES"
        }
    );
}

fn list() {
    println!("built-in scenarios:");
    for entry in scenario_catalog() {
        println!("  {:<28} {}", entry.name, entry.description);
    }
    println!();
    println!("built-in models:");
    for entry in model_catalog() {
        println!("  {:<28} {}", entry.name, entry.description);
    }
}
