//! Experiments on the brick-breaking billiard: one function per subcommand,
//! each returning a one-line summary and an exit status.

pub mod config;
mod frontier_cmd;
mod output;
mod plane_cmd;
mod strip_cmd;
mod verify_cmd;

use std::fmt;

use anyhow::Result;

pub use config::{BackendKind, ExperimentConfig, Mutation};

/// Exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    Mismatch,
    Singular,
    Exhausted,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::Mismatch => 2,
            Status::Singular => 3,
            Status::Exhausted => 4,
        }
    }
}

/// Result of one subcommand: a `key=value` summary line and a status.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summary: String,
    pub status: Status,
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.summary)
    }
}

/// Builds a summary line from a command name and fields.
pub(crate) struct Summary(String);

impl Summary {
    pub fn new(command: &str) -> Self {
        Summary(command.to_string())
    }

    pub fn field(mut self, key: &str, value: impl fmt::Display) -> Self {
        use fmt::Write;
        write!(self.0, " {key}={value}").expect("writing to a string");
        self
    }

    pub fn report(self, status: Status) -> Report {
        let status_name = match status {
            Status::Success => "ok",
            Status::Mismatch => "mismatch",
            Status::Singular => "singular",
            Status::Exhausted => "exhausted",
        };
        Report {
            summary: self.field("status", status_name).0,
            status,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SimulateStrip,
    SimulatePlane,
    Escape,
    SweepH,
    LimitSet,
    DetectPeriodic,
    Render,
    Verify,
}

/// Runs a subcommand on a pool of `workers` threads (machine parallelism
/// when `None`). Only the sweeps and searches use more than one.
pub fn run(cmd: Command, cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Report> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()?;
    pool.install(|| match cmd {
        Command::SimulateStrip => strip_cmd::simulate_strip(cfg),
        Command::Escape => strip_cmd::escape(cfg),
        Command::SweepH => strip_cmd::sweep_h(cfg),
        Command::SimulatePlane => plane_cmd::simulate_plane(cfg),
        Command::Render => plane_cmd::render(cfg),
        Command::DetectPeriodic => plane_cmd::detect_periodic(cfg),
        Command::LimitSet => frontier_cmd::limit_set(cfg),
        Command::Verify => verify_cmd::verify(cfg),
    })
}
