use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stratsym_cli::{builtin_source, list_scenarios, parse_scenario, render, resolve, run_with, Format, RunOptions, DEFAULT_SEED};

#[derive(Parser)]
#[command(name = "stratsym", version, about = "Run symplectic normal-form checks from scenario files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a built-in scenario.
    Run {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Overrides the tolerance of every residual check.
        #[arg(long)]
        tol: Option<f64>,
        /// Verification grid points per axis.
        #[arg(long)]
        grid: Option<usize>,
        /// RK4 step.
        #[arg(long)]
        step: Option<f64>,
        /// Gauss-Legendre order for fiber integrals.
        #[arg(long)]
        quad: Option<usize>,
        #[arg(long, default_value = "table")]
        format: Format,
    },
    /// List the built-in scenarios.
    List,
    /// Show a built-in scenario.
    Describe { name: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, seed, tol, grid, step, quad, format } => {
            let sc = match resolve(&scenario) {
                Ok(sc) => sc,
                Err(e) => {
                    eprintln!("error: {scenario}: {e}");
                    return ExitCode::from(2);
                }
            };
            let report = run_with(&sc, &RunOptions { seed, tol, grid, step, quadrature: quad });
            print!("{}", render(&report, format));
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::List => {
            for name in list_scenarios() {
                let desc = builtin_source(name).and_then(|s| parse_scenario(s).ok()).map(|s| s.description).unwrap_or_default();
                println!("{name:<26} {desc}");
            }
            ExitCode::SUCCESS
        }
        Command::Describe { name } => match builtin_source(&name) {
            Some(src) => {
                print!("{src}");
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("error: no built-in scenario `{name}`");
                ExitCode::from(2)
            }
        },
    }
}
