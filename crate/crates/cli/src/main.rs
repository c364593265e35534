use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hmflow_cli::{cmd_meshgen, cmd_run, cmd_table, cmd_verify, CliError, ExperimentConfig};

/// Finite-element experiments for harmonic map heat flows into the sphere.
#[derive(Parser)]
#[command(name = "hmflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every step size of the config; write trajectories, identity reports and a summary.
    Run(Experiment),
    /// Run a step-size sweep and write a convergence table.
    Table(Experiment),
    /// Write the structured n×n mesh of (-1/2, 1/2)².
    Meshgen {
        /// Subdivisions per side.
        n: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Recheck the discrete identities from the fields stored by `run`.
    Verify {
        /// Output directory of a previous `run`.
        #[arg(long)]
        out: PathBuf,
        /// Configuration to use instead of the copy stored in the directory.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Experiment {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the sweep.
    #[arg(long)]
    threads: Option<usize>,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(a) => {
            let cfg = ExperimentConfig::load(&a.config)?;
            let dir = cmd_run(&cfg, a.out.as_deref(), a.threads, a.force)?;
            println!("wrote {}", dir.display());
        }
        Command::Table(a) => {
            let cfg = ExperimentConfig::load(&a.config)?;
            let path = cmd_table(&cfg, a.out.as_deref(), a.threads, a.force)?;
            print!("{}", std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?);
        }
        Command::Meshgen { n, out, force } => {
            cmd_meshgen(n, &out, force)?;
            println!("wrote {}", out.display());
        }
        Command::Verify { out, config } => {
            let reports = cmd_verify(&out, config.as_deref())?;
            for (path, report) in reports {
                println!("{}", path.display());
                print!("{}", report.to_csv());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
