//! `robustfair`: evaluate, solve and bound robust fair objectives from JSON instance files.
//!
//! Reports go to stdout, messages to stderr. Exit codes: 2 for unreadable or
//! schema-invalid input, 3 for domain errors, 4 when a solve does not converge
//! (the report is still written).

mod commands;
mod schema;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use schema::{Body, DirectionSpec};

#[derive(Parser)]
#[command(name = "robustfair", version, about = "Robust fair welfare and malfare objectives")]
struct Cli {
    /// Seed for randomized restarts.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Solver tolerance and interchange-gap tolerance.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    /// Spaces per indentation level; 0 prints one line.
    #[arg(long, global = true, default_value_t = 2)]
    json_indent: usize,
    /// Omit the timing field so reports are byte-reproducible.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an aggregator (kind "aggregate").
    Eval {
        path: PathBuf,
        /// Also print the gradient.
        #[arg(long)]
        grad: bool,
    },
    /// Best-response weights over a weight set (kind "adversary").
    Adversary {
        path: PathBuf,
        #[arg(long, value_enum)]
        direction: Option<DirectionSpec>,
    },
    /// Solve an allocation instance (kind "allocation").
    Solve {
        path: PathBuf,
        /// Write the iteration trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Strategic values, interchange and altruistic equilibria (kind "game").
    Game {
        path: PathBuf,
        #[arg(long)]
        verify_equilibrium: bool,
        /// Grid resolution as a fraction of the Dæmon's capacity.
        #[arg(long, default_value_t = 1e-2)]
        grid: f64,
    },
    /// Sandwiches, gap bounds and continuity certificates (kind "bounds").
    Bounds { path: PathBuf },
    /// Sample complexity (kind "sample_complexity").
    Samples { path: PathBuf },
}

impl Command {
    fn path(&self) -> &PathBuf {
        match self {
            Command::Eval { path, .. }
            | Command::Adversary { path, .. }
            | Command::Solve { path, .. }
            | Command::Game { path, .. }
            | Command::Bounds { path }
            | Command::Samples { path } => path,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Eval { .. } => "eval",
            Command::Adversary { .. } => "adversary",
            Command::Solve { .. } => "solve",
            Command::Game { .. } => "game",
            Command::Bounds { .. } => "bounds",
            Command::Samples { .. } => "samples",
        }
    }

    fn expected_kind(&self) -> &'static str {
        match self {
            Command::Eval { .. } => "aggregate",
            Command::Adversary { .. } => "adversary",
            Command::Solve { .. } => "allocation",
            Command::Game { .. } => "game",
            Command::Bounds { .. } => "bounds",
            Command::Samples { .. } => "sample_complexity",
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Schema(String),
    Domain(String),
    Io(String),
}

impl From<robustfair::Error> for Failure {
    fn from(e: robustfair::Error) -> Self {
        use robustfair::Error;
        match e {
            Error::DimensionMismatch { .. } | Error::Empty => Failure::Schema(e.to_string()),
            other => Failure::Domain(other.to_string()),
        }
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Schema(_) | Failure::Io(_) => 2,
            Failure::Domain(_) => 3,
        }
    }
}

fn render(value: &Value, indent: usize) -> String {
    if indent == 0 {
        return serde_json::to_string(value).expect("values serialize");
    }
    let pad = vec![b' '; indent];
    let mut out = Vec::new();
    let formatter = serde_json::ser::PrettyFormatter::with_indent(&pad);
    let mut ser = serde_json::Serializer::with_formatter(&mut out, formatter);
    value.serialize(&mut ser).expect("values serialize");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

fn run(cli: &Cli) -> Result<(Value, bool), Failure> {
    let started = Instant::now();
    let path = cli.command.path();
    let bytes = std::fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Failure::Schema(format!("{}: {e}", path.display())))?;
    let body = schema::parse(text).map_err(|e| Failure::Schema(format!("{}:{e}", path.display())))?;
    if body.kind() != cli.command.expected_kind() {
        return Err(Failure::Schema(format!(
            "{}: `{}` expects kind {:?}, found {:?}",
            path.display(),
            cli.command.name(),
            cli.command.expected_kind(),
            body.kind()
        )));
    }
    let flags = commands::Flags {
        seed: cli.seed,
        tol: cli.tol,
    };
    let outcome = match (&cli.command, &body) {
        (Command::Eval { grad, .. }, Body::Aggregate(b)) => commands::eval(b, *grad)?,
        (Command::Adversary { direction, .. }, Body::Adversary(b)) => commands::adversary(b, *direction)?,
        (Command::Solve { trace, .. }, Body::Allocation(b)) => commands::solve(b, &flags, trace.as_deref())?,
        (
            Command::Game {
                verify_equilibrium,
                grid,
                ..
            },
            Body::Game(b),
        ) => commands::game(b, &flags, *verify_equilibrium, *grid)?,
        (Command::Bounds { .. }, Body::Bounds(b)) => commands::bounds(b)?,
        (Command::Samples { .. }, Body::SampleComplexity(b)) => commands::samples(b)?,
        _ => unreachable!("kind checked above"),
    };
    let mut report = json!({
        "version": schema::VERSION,
        "kind": body.kind(),
        "command": cli.command.name(),
        "input_sha256": hex::encode(Sha256::digest(&bytes)),
        "result": outcome.result,
        "diagnostics": { "seed": cli.seed, "tol": cli.tol },
    });
    if !cli.no_timing {
        report["timing"] = json!({ "seconds": started.elapsed().as_secs_f64() });
    }
    Ok((report, outcome.converged))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((report, converged)) => {
            println!("{}", render(&report, cli.json_indent));
            if converged {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: solver did not reach tolerance {}", cli.tol);
                ExitCode::from(4)
            }
        }
        Err(failure) => {
            let message = match &failure {
                Failure::Schema(m) | Failure::Domain(m) | Failure::Io(m) => m,
            };
            eprintln!("error: {message}");
            ExitCode::from(failure.exit_code())
        }
    }
}
