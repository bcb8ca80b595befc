use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use maxwell_ocp_cli::app::{configure_threads, mesh_info};
use maxwell_ocp_cli::{run_file, CliError, RunOptions};

/// Optimal control of the curl-curl equation with adaptive edge elements.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration file and write history.csv, eoc.csv and VTK files.
    Run {
        config: PathBuf,
        /// Compare a test1 uniform study against the reference table.
        #[arg(long)]
        check: bool,
        /// Output directory, overriding the `out` key.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a summary of an MSH 2.x mesh.
    MeshInfo { mesh: PathBuf },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Run { config, check, out } => {
            let outcome = run_file(&config, &RunOptions { check, out })?;
            println!(
                "{} meshes solved, output in {}",
                outcome.run.records.len(),
                outcome.out_dir.display()
            );
        }
        Command::MeshInfo { mesh } => print!("{}", mesh_info(&mesh)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
