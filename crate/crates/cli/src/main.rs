//! `hft`: simulate, reconstruct, sweep, mix and ingest from the command line.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "hft", version, about = "Phase retrieval from densely sampled Fraunhofer magnitudes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Magnitude of the oversampled transform of an object, with optional noise.
    Simulate(config::SimulateConfig),
    /// Recover an object from a magnitude measurement with HIO.
    Reconstruct(config::ReconstructConfig),
    /// Mean log10 S over candidate support sizes.
    Sweep(config::SweepConfig),
    /// Combine the magnitude of one object with the phase of another.
    Mix(config::MixConfig),
    /// Turn camera frames into a measurement.
    Ingest(config::IngestRunConfig),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate(c) => commands::simulate(c.layered()?),
        Command::Reconstruct(c) => commands::reconstruct(c.layered()?),
        Command::Sweep(c) => commands::sweep(c.layered()?),
        Command::Mix(c) => commands::mix(c.layered()?),
        Command::Ingest(c) => commands::ingest(c.layered()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
