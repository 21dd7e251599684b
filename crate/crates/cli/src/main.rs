//! `qvlab`: generate Q-valued fields, analyze them, minimize the Dirichlet
//! energy and run verification campaigns.

mod analyze;
mod args;
mod config;
mod gen;
mod minimize;
mod provenance;
mod verify;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

/// Exit status classes.
#[derive(Debug)]
pub enum CliError {
    /// Exit 1.
    VerificationFailed(String),
    /// Exit 2.
    Usage(String),
    /// Exit 3.
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::VerificationFailed(_) => 1,
            Self::Usage(_) => 2,
            Self::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::VerificationFailed(m) => write!(f, "verification failed: {m}"),
            Self::Usage(m) => write!(f, "{m}"),
            Self::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<qvlab_core::Error> for CliError {
    fn from(e: qvlab_core::Error) -> Self {
        match e {
            qvlab_core::Error::Io(_) | qvlab_core::Error::Json(_) => Self::Io(e.to_string()),
            other => Self::Usage(other.to_string()),
        }
    }
}

/// Reads an input file, tagging failures with the path.
pub fn input<T>(path: &std::path::Path, r: qvlab_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| match CliError::from(e) {
        CliError::Io(m) => CliError::Io(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[derive(Parser, Debug)]
#[command(name = "qvlab", version, about = "Numerical laboratory for stationary Q-valued maps")]
struct Cli {
    /// INI file with default parameters; flags override its values.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,
    /// Worker threads (falls back to QVLAB_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Sample a closed-form map on a grid and write a field file.
    Gen(gen::GenArgs),
    /// Run one analysis on a field file.
    Analyze(analyze::AnalyzeArgs),
    /// Run verification campaigns; exits 1 on any failed trial.
    Verify(verify::VerifyArgs),
    /// Minimize the Dirichlet energy with given boundary values.
    Minimize(minimize::MinimizeArgs),
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var("QVLAB_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("QVLAB_THREADS={v:?} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn run(argv: Vec<OsString>) -> Result<(), CliError> {
    let root = Cli::command();
    let argv = config::merge(&root, argv)?;
    let matches = match root.try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let help = matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion);
            let _ = e.print();
            return if help { Ok(()) } else { Err(CliError::Usage(String::new())) };
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(n) = thread_count(cli.threads)? {
        if n == 0 {
            return Err(CliError::Usage("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match cli.command {
        Cmd::Gen(a) => gen::run(&a),
        Cmd::Analyze(a) => analyze::run(&a),
        Cmd::Verify(a) => verify::run(&a),
        Cmd::Minimize(a) => minimize::run(&a),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string();
            if !msg.is_empty() {
                eprintln!("qvlab: {msg}");
            }
            ExitCode::from(e.code())
        }
    }
}
