//! Command-line front end. Every subcommand reads a JSON experiment config
//! and writes its results into an output directory.

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::FitMode;
pub use config::{ExperimentConfig, SCHEMA_VERSION};

use crate::error::Result;
use output::OutDir;

#[derive(Debug, Parser)]
#[command(name = "logconcave", version, about = "Bayesian log-concave density estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for replicated experiments; results do not depend on it.
    #[arg(long, default_value_t = default_jobs())]
    pub jobs: usize,
    /// Overrides the config's output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw densities from the prior.
    SamplePrior(Common),
    /// Run one posterior chain and summarise it.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Support prior; the config's choice when absent.
        #[arg(long, value_enum)]
        mode: Option<FitMode>,
    },
    /// Pointwise coverage of 95% credible intervals.
    Table1(Common),
    /// Log-concave maximum likelihood estimate.
    Mle(Common),
    /// Hellinger distance of the posterior mean against n.
    Rate(Common),
    /// Certified piecewise-linear approximation of a log-concave truth.
    Approx(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::SamplePrior(c)
            | Command::Table1(c)
            | Command::Mle(c)
            | Command::Rate(c)
            | Command::Approx(c) => c,
            Command::Fit { common, .. } => common,
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let common = cli.command.common();
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = OutDir::create(common.out.as_ref().unwrap_or(&cfg.outputs))?;
    let jobs = common.jobs.max(1);
    match &cli.command {
        Command::SamplePrior(_) => commands::sample_prior(&cfg, &out),
        Command::Fit { mode, .. } => commands::fit(&cfg, *mode, &out),
        Command::Table1(_) => commands::table1(&cfg, jobs, &out),
        Command::Mle(_) => commands::mle(&cfg, &out),
        Command::Rate(_) => commands::rate(&cfg, jobs, &out),
        Command::Approx(_) => commands::approx(&cfg, &out),
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("logconcave: {e}");
            e.exit_code()
        }
    }
}

pub fn run() -> i32 {
    run_with(std::env::args_os())
}
