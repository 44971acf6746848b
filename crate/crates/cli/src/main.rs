use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dce_cli::{cmd_run, cmd_sweep, cmd_verify, EXIT_IO};

/// Simulate, verify and sweep the d.c.e. priority construction.
#[derive(Parser)]
#[command(name = "dce-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one construction and print its manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trace_out: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also verify the run and write the report here.
        #[arg(long)]
        report_out: Option<PathBuf>,
    },
    /// Check a trace; exit 1 if any check fails.
    Verify {
        #[arg(long)]
        trace: PathBuf,
        /// Needed for the replay check.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run and verify every cell of a grid.
    Sweep {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            trace_out,
            seed,
            report_out,
        } => cmd_run(config, trace_out, *seed, report_out.as_deref()),
        Command::Verify { trace, config } => cmd_verify(trace, config.as_deref()),
        Command::Sweep { grid, out } => cmd_sweep(grid, out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_IO)
        }
    }
}
