//! `qpt`: simulate, reconstruct, project, compare and render single-qubit
//! process tomography runs.

mod commands;
mod error;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qpt_core::state_tomography::Shots;

#[derive(Parser)]
#[command(name = "qpt", version, about = "Single-qubit quantum process tomography")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Where the experiment configuration comes from.
#[derive(Args, Clone)]
pub struct ConfigArgs {
    /// JSON configuration file.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in configuration: paper-20ns, paper-40ns, paper-80ns
    /// (pipeline also accepts paper-repro).
    #[arg(long)]
    pub preset: Option<String>,
    /// Overrides the configured random seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured shots: a positive integer or "exact".
    #[arg(long)]
    pub shots: Option<Shots>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the four-input experiment and write measurement records.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct χ and the Bloch map from a records file.
    Reconstruct {
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add the nearest physical process to a result file.
    Project {
        result: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Objective evaluations allowed per restart.
        #[arg(long, default_value_t = 50_000)]
        max_evals: usize,
    },
    /// Compare the processes of two result files.
    Compare {
        first: PathBuf,
        second: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write Bloch-ellipsoid meshes (OBJ plus JSON sidecar) for a result file.
    Render {
        result: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..=7))]
        subdivisions: u32,
    },
    /// Simulate, reconstruct, project, compare with the identity and render.
    Pipeline {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..=7))]
        subdivisions: u32,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QPT_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate { config, out } => commands::simulate(&config, &out),
        Command::Reconstruct { records, out } => commands::reconstruct(&records, &out),
        Command::Project { result, out, max_evals } => commands::project(&result, &out, max_evals),
        Command::Compare { first, second, out } => commands::compare(&first, &second, &out),
        Command::Render {
            result,
            out,
            subdivisions,
        } => commands::render(&result, &out, subdivisions),
        Command::Pipeline {
            config,
            out,
            subdivisions,
        } => commands::pipeline(&config, &out, subdivisions),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qpt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
