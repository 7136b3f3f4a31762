mod artifact;
mod config;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use artifact::OutDir;
use config::RunConfig;

/// Build and verify rank-one constructions with prescribed multiplicity sets.
#[derive(Parser)]
#[command(name = "multiplicity", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory for all artifacts.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Override `caps.max_h`.
    #[arg(long, global = true, value_name = "N")]
    max_h: Option<u64>,
    /// Worker threads for independent queries.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Build the block system and write blocks.json.
    Construct,
    /// Check orbit counts of H-elements against E; writes lemma_report.json.
    VerifyLemma,
    /// Build the (C,F) system and cocycle tables.
    BuildSystem,
    /// Weak-limit traces and the premise suite.
    WeakLimits,
    /// Predicted and realized multiplicity sets.
    Predict,
    /// Cross-check both engines against the brute-force oracle on toy systems.
    Oracle,
}

#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub exit: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: &'static str, exit: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            exit,
            message: message.into(),
        }
    }
}

impl From<multiplicity::Error> for CliError {
    fn from(e: multiplicity::Error) -> Self {
        use multiplicity::Error as E;
        let (code, exit) = match &e {
            E::TrivialTarget => ("E_TRIVIAL", 2),
            E::CapExceeded { .. } => ("E_CAP", 3),
            E::InvalidArgument(_) | E::Precondition(_) | E::IncompleteWindow(_) => ("E_PRECONDITION", 2),
            E::NotFound(_) => ("E_NOT_FOUND", 1),
            E::Undefined(_) | E::Construction(_) => ("E_VERIFY", 1),
        };
        CliError::new(code, exit, e.to_string())
    }
}

pub struct Outcome {
    pass: bool,
    outputs: Vec<PathBuf>,
    failures: Vec<String>,
}

impl Outcome {
    pub fn pass(outputs: Vec<PathBuf>) -> Self {
        Outcome {
            pass: true,
            outputs,
            failures: Vec::new(),
        }
    }

    pub fn verdict(pass: bool, outputs: Vec<PathBuf>, failures: Vec<String>) -> Self {
        Outcome {
            pass,
            outputs,
            failures,
        }
    }
}

#[derive(Serialize)]
struct StatusLine<'a> {
    status: &'static str,
    outputs: Vec<String>,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    failures: &'a [String],
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: &'a str,
    exit_code: u8,
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::new("E_USAGE", 2, "--jobs must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::new("E_USAGE", 2, e.to_string()))?;
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::new("E_USAGE", 2, "--config PATH is required"))?;
    let cfg = RunConfig::load(path, cli.max_h)?;
    let out = OutDir::new(&cli.out, &cfg.hash)?;
    match cli.command {
        Command::Construct => stages::construct(&cfg, &out),
        Command::VerifyLemma => stages::verify_lemma(&cfg, &out),
        Command::BuildSystem => stages::build_system(&cfg, &out),
        Command::WeakLimits => stages::weak_limits(&cfg, &out),
        Command::Predict => stages::predict(&cfg, &out),
        Command::Oracle => stages::oracle(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let line = StatusLine {
                status: if outcome.pass { "pass" } else { "fail" },
                outputs: outcome.outputs.iter().map(|p| p.display().to_string()).collect(),
                failures: &outcome.failures,
            };
            println!("{}", serde_json::to_string(&line).expect("status json"));
            ExitCode::from(if outcome.pass { 0 } else { 1 })
        }
        Err(e) => {
            let line = ErrorLine {
                error: ErrorBody {
                    code: e.code,
                    message: &e.message,
                    exit_code: e.exit,
                },
            };
            eprintln!("{}", serde_json::to_string(&line).expect("error json"));
            ExitCode::from(e.exit)
        }
    }
}
