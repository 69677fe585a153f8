//! `spv` command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 1 runtime error.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub mod analyze;
pub mod bench;
pub mod config;
pub mod io;
pub mod phosphenize;
pub mod serve;
pub mod simulate;

pub use analyze::{cmd_analyze, AnalyzeArgs, AnalyzeOutput};
pub use bench::{cmd_bench, BenchArgs, BenchResult};
pub use config::{RunArgs, RunConfig};
pub use phosphenize::{cmd_phosphenize, PhosphenizeArgs};
pub use serve::{cmd_serve, ServeArgs};
pub use simulate::{cmd_simulate, ConditionOrder, SimulateArgs, SimulateOutput};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Input { path: PathBuf, source: spv_core::Error },
    #[error(transparent)]
    Core(#[from] spv_core::Error),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "spv", version, about = "Simulated prosthetic vision: render phosphene percepts and run acuity experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Render images (PGM/PNG files or directories of them) as phosphene percepts.
    Phosphenize(PhosphenizeArgs),
    /// Run the test battery against the ideal observer and write trial logs.
    Simulate(SimulateArgs),
    /// ANOVA, Tukey post-hoc, acuity table and box-plot data from trial logs.
    Analyze(AnalyzeArgs),
    /// Run the live-session WebSocket service.
    Serve(ServeArgs),
    /// Measure single-threaded phosphenization throughput.
    Bench(BenchArgs),
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Phosphenize(a) => {
            let written = cmd_phosphenize(&a)?;
            for p in written {
                println!("{}", p.display());
            }
        }
        Command::Simulate(a) => {
            let out = cmd_simulate(&a)?;
            for b in &out.summary.blocks {
                let acuity = b.acuity.as_ref().map(|a| format!("  {:.3} logMAR", a.logmar)).unwrap_or_default();
                println!(
                    "{} {:8} {:12} {:6.2}%{}",
                    b.session_id, b.test, b.condition, b.summary.performance_pct, acuity
                );
            }
            println!("{} blocks written to {}", out.summary.blocks.len(), out.out_dir.display());
        }
        Command::Analyze(a) => {
            let out = cmd_analyze(&a)?;
            print!("{}", out.report.to_text());
        }
        Command::Serve(a) => cmd_serve(&a)?,
        Command::Bench(a) => {
            let r = cmd_bench(&a)?;
            println!("{r}");
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("spv: {e}");
            e.exit_code()
        }
    }
}
