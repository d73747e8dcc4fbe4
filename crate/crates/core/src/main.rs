use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gvf_core::scenario::{
    degenerate_neighborhoods, format_summaries, run_basin, run_compare, run_critical, run_field, run_scenario,
    self_check, Scenario, ScenarioError,
};

/// Guiding-vector-field path following: simulation, analysis and export.
#[derive(Parser)]
#[command(name = "gvf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every initial pose; writes one CSV per run and a summary.
    Simulate(RunArgs),
    /// Export the guiding field on a grid.
    Field(RunArgs),
    /// Find and classify critical points.
    Critical(RunArgs),
    /// Sweep a grid of starts and headings and label each outcome.
    Basin(RunArgs),
    /// Run GVF and the baseline controllers from one start.
    Compare(RunArgs),
    /// Run the built-in derivative and field self-checks.
    Check,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scenario file (TOML).
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the scenario.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<(Scenario, PathBuf), ScenarioError> {
        let scenario = Scenario::load(&self.config)?;
        let out = self.out.clone().unwrap_or_else(|| scenario.output_dir.clone());
        Ok((scenario, out))
    }
}

fn run(command: Command) -> Result<bool, ScenarioError> {
    match command {
        Command::Simulate(args) => {
            let (scenario, out) = args.load()?;
            let rows = run_scenario(&scenario, &out)?;
            print!("{}", format_summaries(&rows));
            println!("wrote {} runs to {}", rows.len(), out.display());
        }
        Command::Field(args) => {
            let (scenario, out) = args.load()?;
            let (rows, n) = run_field(&scenario, &out)?;
            let flagged = rows.iter().filter(|r| !r.regular).count();
            println!(
                "{} cells, {} degenerate in {} neighborhood(s); wrote {}",
                rows.len(),
                flagged,
                degenerate_neighborhoods(&rows, n),
                out.display()
            );
        }
        Command::Critical(args) => {
            let (scenario, out) = args.load()?;
            let (_, text) = run_critical(&scenario, &out)?;
            print!("{text}");
        }
        Command::Basin(args) => {
            let (scenario, out) = args.load()?;
            let summary = run_basin(&scenario, &out)?;
            print!("{}", toml::to_string(&summary)?);
        }
        Command::Compare(args) => {
            let (scenario, out) = args.load()?;
            for r in run_compare(&scenario, &out)? {
                let settle = r.settling_time.map(|t| format!("{t:.3}")).unwrap_or_else(|| "-".into());
                println!(
                    "{:<6} {:<22} overshoot={:>8.3} settling={:>8} steady={:.4}",
                    r.controller,
                    r.termination.as_str(),
                    r.max_overshoot,
                    settle,
                    r.steady_state_mean
                );
            }
        }
        Command::Check => {
            let results = self_check();
            for r in &results {
                println!("{} {} ({})", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            return Ok(results.iter().all(|r| r.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
