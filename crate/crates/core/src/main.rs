use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use willmore::config::RunConfig;
use willmore::run::{run_eoc, run_evolve, run_wulff};
use willmore::Error;

/// Complementary finite volume solver for the anisotropic Willmore flow of
/// graphs.
#[derive(Parser)]
#[command(name = "willmore", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured flow and write snapshots plus the energy
    /// time series.
    Evolve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the manufactured-solution mesh ladder and write EOC tables.
    Eoc {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sample the Wulff shape of the configured anisotropy.
    Wulff {
        #[arg(long)]
        config: PathBuf,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Contract(_) => 2,
        Error::Divergence { .. } | Error::StepFailure { .. } | Error::NonFiniteState { .. } => 3,
        _ => 1,
    }
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Evolve { config } => {
            let cfg = RunConfig::from_path(&config)?;
            let report = run_evolve(&cfg)?;
            println!(
                "evolve: {} accepted steps ({} rejected), {} snapshots in {}",
                report.steps_accepted,
                report.steps_rejected,
                report.snapshots.len(),
                cfg.output.directory.display()
            );
            if let (Some(first), Some(last)) = (report.energy.first(), report.energy.last()) {
                println!(
                    "energy: {:.6e} -> {:.6e} (drift {:.3e})",
                    first.willmore, last.willmore, last.drift
                );
            }
            Ok(())
        }
        Command::Eoc { config } => {
            let cfg = RunConfig::from_path(&config)?;
            let report = run_eoc(&cfg)?;
            for row in &report.rows_u {
                match (&row.errors, row.eoc_l1) {
                    (Some(e), Some(o)) => {
                        println!("mesh {:>4}: L1 {:.4e} (EOC {:.2})", row.mesh, e.err_l1, o)
                    }
                    (Some(e), None) => println!("mesh {:>4}: L1 {:.4e}", row.mesh, e.err_l1),
                    (None, _) => println!("mesh {:>4}: failed", row.mesh),
                }
            }
            println!("tables written to {}", cfg.output.directory.display());
            Ok(())
        }
        Command::Wulff { config } => {
            let cfg = RunConfig::from_path(&config)?;
            let path = run_wulff(&cfg)?;
            println!("wulff boundary written to {}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
