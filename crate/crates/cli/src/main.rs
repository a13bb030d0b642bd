use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use casse_briques_cli::{run, Command, ExperimentConfig};
use clap::{Parser, Subcommand};

/// Experiments on the brick-breaking billiard. Keys of the optional TOML
/// config file match the long flags; flags win.
#[derive(Debug, Parser)]
#[command(name = "casse-briques", version)]
struct Cli {
    /// TOML file with experiment keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for sweeps and searches (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Trajectory in the half-strip; writes a trace CSV.
    SimulateStrip(ExperimentConfig),
    /// Orbit in the plane; writes the destruction log.
    SimulatePlane(ExperimentConfig),
    /// Heights and times over many base returns.
    Escape(ExperimentConfig),
    /// Escape rate over a grid of base depths.
    SweepH(ExperimentConfig),
    /// Point clouds of the frontier map.
    LimitSet(ExperimentConfig),
    /// Grid search for a relatively periodic plane orbit.
    DetectPeriodic(ExperimentConfig),
    /// PGM/SVG render of a destruction log.
    Render(ExperimentConfig),
    /// Invariant suites.
    Verify(ExperimentConfig),
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn real_main() -> Result<u8> {
    let cli = Cli::parse();
    let (cmd, flags) = match cli.cmd {
        Cmd::SimulateStrip(c) => (Command::SimulateStrip, c),
        Cmd::SimulatePlane(c) => (Command::SimulatePlane, c),
        Cmd::Escape(c) => (Command::Escape, c),
        Cmd::SweepH(c) => (Command::SweepH, c),
        Cmd::LimitSet(c) => (Command::LimitSet, c),
        Cmd::DetectPeriodic(c) => (Command::DetectPeriodic, c),
        Cmd::Render(c) => (Command::Render, c),
        Cmd::Verify(c) => (Command::Verify, c),
    };
    let file = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let report = run(cmd, &file.merged(flags), cli.workers)?;
    println!("{report}");
    Ok(report.status.code() as u8)
}
