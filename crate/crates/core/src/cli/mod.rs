//! Batch front end: configuration, stage orchestration and exit codes.

pub mod commands;
pub mod config;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{RunOptions, Session};
pub use config::ProjectConfig;

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "ssym", about = "Symbolic models and controllers for stochastic control systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, default_value = "config.json")]
    pub config: PathBuf,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker cap for parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides the simulation master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Omit wall-clock figures so reports are byte-reproducible.
    #[arg(long, global = true)]
    pub no_timings: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    Certify,
    Plan,
    Build,
    Synth,
    Sim,
    Bounds,
    Pipeline,
}

/// Runs one command and maps the outcome to an exit status.
pub fn run(cli: &Cli, out: &mut (dyn Write + Send)) -> i32 {
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, out: &mut (dyn Write + Send)) -> Result<()> {
    let opts = RunOptions { config: cli.config.clone(), out: cli.out.clone(), seed: cli.seed, timings: !cli.no_timings };
    let body = |out: &mut (dyn Write + Send)| -> Result<()> {
        let mut s = Session::open(opts, out)?;
        match cli.command {
            Command::Certify => s.certify(),
            Command::Plan => s.plan().map(drop),
            Command::Build => s.build().map(drop),
            Command::Synth => s.synth().map(drop),
            Command::Sim => s.sim(),
            Command::Bounds => s.bounds(),
            Command::Pipeline => s.pipeline(),
        }
    };
    match cli.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| crate::Error::InvalidArgument(e.to_string()))?
            .install(|| body(out)),
        None => body(out),
    }
}
