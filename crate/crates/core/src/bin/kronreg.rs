use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kronreg::experiment::{self, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "kronreg",
    version,
    about = "Kronecker-structured Tikhonov regularization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write PGM images from a solve report, a matrix CSV or a results table.
    Render {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the iterative solvers with dense solutions at small sizes.
    Selfcheck,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> kronreg::Result<ExitCode> {
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let out = experiment::run(&cfg)?;
            for r in &out.rows {
                println!(
                    "{:<12} nu={:<8e} seed={:<4} k={:<3} mu={:<10.3e} rel_error={:.3e}{}",
                    r.regularizer_label,
                    r.noise_level,
                    r.seed,
                    r.k,
                    r.mu,
                    r.relative_error,
                    if r.converged { "" } else { "  (not converged)" }
                );
            }
            println!("wrote {}", out.csv_path.display());
            Ok(if out.all_converged() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Render { input, out } => {
            for p in experiment::render(&input, &out)? {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Selfcheck => {
            let checks = experiment::selfcheck();
            for c in &checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "ok  " } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            Ok(if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
