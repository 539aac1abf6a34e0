use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

mod commands;
mod config;

use config::{Command, CommonArgs};

/// Fragment-tree molecular strings from the command line.
#[derive(Debug, Parser)]
#[command(name = "tsmiles", version, about)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

/// Per-line success tally of a finished command.
#[derive(Debug, Clone, Copy)]
pub struct Outcome {
    pub total: usize,
    pub failed: usize,
}

impl Outcome {
    fn code(self) -> u8 {
        if self.failed == 0 {
            0
        } else if self.failed >= self.total {
            1
        } else {
            3
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (generate, stats) = match &cli.command {
        Command::Generate(g) => (Some(g), None),
        Command::Stats(s) => (None, Some(s)),
        _ => (None, None),
    };
    let cfg = match config::resolve(cli.common, generate, stats) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("tsmiles: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Encode => commands::encode(&cfg),
        Command::Decode => commands::decode(&cfg),
        Command::Roundtrip => commands::roundtrip(&cfg),
        Command::Generate(_) => commands::generate(&cfg),
        Command::Stats(_) => commands::stats(&cfg),
        Command::Augment => commands::augment(&cfg),
    };
    match result {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("tsmiles: {e}");
            ExitCode::from(match e {
                CliError::Config(_) => 2,
                _ => 1,
            })
        }
    }
}
