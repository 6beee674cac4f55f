use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod output;
mod tasks;

use config::Overrides;
use tasks::Run;

#[derive(Parser)]
#[command(name = "boolean-lab", version, about = "Simulate, measure and analyse planar Boolean models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Write one realization as a grain list.
    Simulate,
    /// Exact intrinsic volumes of saved realizations.
    Measure {
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
    },
    /// Densities of the intrinsic volumes.
    Predict,
    /// Densities and intensity estimated from simulated windows.
    Estimate,
    /// Asymptotic covariance matrix of the intrinsic volumes.
    Covariance,
    /// Distance to normality over growing windows.
    Clt,
    /// Emptiness probability of a probe set.
    Capacity,
    /// Binary PGM image of one realization.
    Render,
}

fn execute(cli: &Cli) -> anyhow::Result<Vec<PathBuf>> {
    let run = Run::new(cli.overrides.resolve()?)?;
    let staged = match &cli.command {
        Command::Simulate => tasks::simulate(&run)?,
        Command::Measure { input } => tasks::measure(&run, input)?,
        Command::Predict => tasks::predict(&run)?,
        Command::Estimate => tasks::estimate(&run)?,
        Command::Covariance => tasks::covariance(&run)?,
        Command::Clt => tasks::clt(&run)?,
        Command::Capacity => tasks::capacity(&run)?,
        Command::Render => tasks::render(&run)?,
    };
    staged.commit(&cli.overrides.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
