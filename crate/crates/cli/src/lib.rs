//! Library side of the `fugnn` binary: configuration, commands and text
//! rendering, kept here so the integration tests can drive them directly.

use std::io::Write;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use config::Overrides;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "fugnn", version, about = "Fair spectral graph learning experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a biased two-block graph: edge list, node table, splits, metadata.
    Gen(Overrides),
    /// Compute and store the top-K eigenpairs with a timing record.
    Eig(Overrides),
    /// Check the three propagation similarity results on generated operators.
    Analyze(Overrides),
    /// Train the spectral model (and the baseline) over the configured seeds.
    Train(Overrides),
    /// K sweep plus eigensolver runtime comparison.
    Bench(Overrides),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Eig(_) => "eig",
            Command::Analyze(_) => "analyze",
            Command::Train(_) => "train",
            Command::Bench(_) => "bench",
        }
    }

    fn overrides(&self) -> &Overrides {
        match self {
            Command::Gen(o) | Command::Eig(o) | Command::Analyze(o) | Command::Train(o) | Command::Bench(o) => o,
        }
    }

    pub fn run(&self) -> Result<commands::CommandOutput, CliError> {
        let cfg = self.overrides().resolve()?;
        match self {
            Command::Gen(_) => commands::gen(&cfg),
            Command::Eig(_) => commands::eig(&cfg),
            Command::Analyze(_) => commands::analyze(&cfg),
            Command::Train(_) => commands::train(&cfg),
            Command::Bench(_) => commands::bench(&cfg),
        }
    }
}

/// Parses `args`, runs the command, prints its output and returns the exit
/// code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.command.run() {
        Ok(out) => {
            // a closed pipe (e.g. `| head`) is not an error of the command
            let mut stdout = std::io::stdout().lock();
            let _ = write!(stdout, "{}", out.text);
            let _ = writeln!(stdout, "run directory: {}", out.run_dir.display());
            match out.failure {
                Some(msg) => {
                    eprintln!("error: {msg}");
                    3
                }
                None => 0,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
