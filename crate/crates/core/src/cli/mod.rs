//! Command-line front end. Every command writes its outputs plus a
//! `manifest.json` into `--out`.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::RunManifest;
pub use config::{InitKind, Overrides, RunConfig};

use crate::error::Result;
use crate::integrators::Scheme;

#[derive(Debug, Parser)]
#[command(name = "odyn", version, about = "Opinion-dynamics message passing on graphs and hypergraphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one dynamic and write its trajectory and energy
    Simulate(Common),
    /// Energy decay series for one or more configs
    Energy(Common),
    /// Filter a weighted network by final-state similarity
    Simplify(Common),
    /// Label propagation on a labelled graph
    Classify(Common),
    /// Homophily level and degree-based influencer categories
    Homophily(Common),
    /// Run a parameter grid in parallel
    Sweep(Common),
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Edge list CSV (`src,dst,weight`)
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Membership CSV (`node,hyperedge,weight`)
    #[arg(long)]
    pub hypergraph: Option<PathBuf>,
    /// Label CSV (`node,label[,split]`)
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// JSON config; `energy` accepts it several times
    #[arg(long)]
    pub config: Vec<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, created if missing
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads for `sweep`
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub scheme: Option<Scheme>,
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
}

impl Common {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            scheme: self.scheme,
            t_end: self.t_end,
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(c) => commands::simulate(&c),
        Command::Energy(c) => commands::energy(&c),
        Command::Simplify(c) => commands::simplify(&c),
        Command::Classify(c) => commands::classify(&c),
        Command::Homophily(c) => commands::homophily(&c),
        Command::Sweep(c) => commands::sweep(&c),
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
