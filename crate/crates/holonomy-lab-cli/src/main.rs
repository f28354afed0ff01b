//! Scenario-driven front end: load a bundle/connection/loop scenario, run
//! transport, holonomy, curvature, Wilson-loop and groupoid checks, and
//! emit deterministic CSV plus a versioned JSON summary.
//!
//! Exit codes: 0 all requested checks pass, 2 scenario validation error,
//! 3 numeric check failure, 4 I/O error.

mod runner;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use runner::{RunError, CommandOutput};

#[derive(Parser)]
#[command(name = "holonomy-lab", version, about = "parallel transport and Wilson-loop laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (JSON)
    #[arg(long, global = true, default_value = "scenario.json")]
    scenario: PathBuf,

    /// Output directory for CSV and summary files
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the integrator step from the scenario
    #[arg(long, global = true)]
    step: Option<f64>,

    /// Override the generalized-Wilson series order
    #[arg(long, global = true)]
    order: Option<usize>,

    /// Emit the Dyson oracle column and its residual checks
    #[arg(long, global = true)]
    oracle: bool,

    /// Override the scenario seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for batch evaluation (fallback: HOLONOMY_LAB_JOBS)
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Parallel transports along each loop at a fixed set of end times
    Transport,
    /// Holonomy of each loop
    Holonomy,
    /// Curvature versus the small-loop estimator
    Curvature,
    /// Wilson loop values and invariance residuals
    Wilson,
    /// Truncated generalized Wilson loop series
    GenWilson,
    /// Flatness suite on the scenario's loop family
    Flatness,
    /// Exact axiom table for bundled finite groupoids
    GroupoidCheck,
    /// Every check the scenario supports
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let jobs = cli.jobs.or_else(|| {
        std::env::var("HOLONOMY_LAB_JOBS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(jobs) = jobs {
        // Ignore the error if a pool is already installed.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }

    let text = match std::fs::read_to_string(&cli.scenario) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read scenario {}: {e}", cli.scenario.display());
            return ExitCode::from(4);
        }
    };
    let parsed: scenario::Scenario = match serde_json::from_str(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: invalid scenario: {e}");
            return ExitCode::from(2);
        }
    };
    let built = match scenario::build(&parsed, cli.step, cli.order, cli.seed) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: invalid scenario: {e}");
            return ExitCode::from(2);
        }
    };

    let (name, result): (&str, Result<CommandOutput, RunError>) = match cli.command {
        Command::Transport => ("transport", runner::run_transport(&built)),
        Command::Holonomy => ("holonomy", runner::run_holonomy(&built)),
        Command::Curvature => ("curvature", runner::run_curvature(&built)),
        Command::Wilson => ("wilson", runner::run_wilson(&built)),
        Command::GenWilson => ("gen-wilson", runner::run_gen_wilson(&built, cli.oracle)),
        Command::Flatness => ("flatness", runner::run_flatness(&built)),
        Command::GroupoidCheck => ("groupoid-check", runner::run_groupoid_check(&built)),
        Command::All => ("all", runner::run_all(&built, cli.oracle)),
    };

    let output = match result {
        Ok(o) => o,
        Err(RunError::Validation(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(RunError::Io(e)) => {
            eprintln!("error: i/o failure: {e}");
            return ExitCode::from(4);
        }
    };

    match runner::write_output(&cli.out, name, &output) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            for failed in output.checks.iter().filter(|c| !c.pass) {
                eprintln!(
                    "check failed: {} (residual {:.3e}, tolerance {:.3e})",
                    failed.check, failed.residual, failed.tolerance
                );
            }
            ExitCode::from(3)
        }
        Err(RunError::Io(e)) => {
            eprintln!("error: i/o failure: {e}");
            ExitCode::from(4)
        }
        Err(RunError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
