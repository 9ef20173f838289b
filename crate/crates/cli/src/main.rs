mod commands;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

const EXIT_CODES: &str = "\
Exit codes:
  0  success (a flawed protocol is still a successful verification)
  1  internal error
  2  usage error: bad flags or out-of-range parameters
  3  I/O error: missing input or unwritable output
  4  malformed input file
  5  search budget exhausted, or a verdict came back unknown
  6  a proven claim did not hold
  7  indeterminate: continuous error bound reached a quarter rotation

Errors are printed to stderr as JSON: {\"error\": {\"kind\", \"message\", \"exit_code\"}}.";

#[derive(Parser, Serialize)]
#[command(
    name = "chain-parity",
    version,
    about = "Quantum vs classical one-way chain parity workbench",
    after_help = EXIT_CODES
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads for verify and search. Never changes a verdict.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Write wall-clock timing to this sidecar file. Reports never carry it.
    #[arg(long, global = true)]
    pub metadata: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Angle,
    Amplitude,
    Continuous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exhaustive,
    Profile,
}

#[derive(Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Exhaustively check |A ⊕ {a,b}| ≥ |A| + 1 over K-free sets in Z_M.
    LemmaCheck {
        /// Ring modulus M = 2K (even, at most 20).
        #[arg(long = "two-k")]
        two_k: u64,
        /// Run even when K is not a power of two. Results are exploratory.
        #[arg(long)]
        allow_non_power_of_two: bool,
        /// How many zero-growth examples to list.
        #[arg(long, default_value_t = 16)]
        max_examples: usize,
    },
    /// Run the spin-carrier chain on an instance.
    Quantum {
        /// Instance file {"K", "k"}, or for the continuous model also
        /// {"K", "alpha", "segments": [[length, value], ...]}.
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        model: Model,
        /// Midpoint-rule steps for the continuous model.
        #[arg(long, default_value_t = 4096)]
        steps: usize,
    },
    /// Run the classical rod with uniform per-section angle jitter.
    Rod {
        #[arg(long)]
        instance: PathBuf,
        /// Jitter amplitude J in radians; each section adds noise in [-J, J].
        #[arg(long)]
        jitter: f64,
        #[arg(long)]
        seed: u64,
    },
    /// Check a classical protocol file on every promise input.
    Verify {
        #[arg(long)]
        protocol: PathBuf,
    },
    /// Decide protocol existence for L = 1..=max-l and report the minimal L.
    Search {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        max_l: usize,
        #[arg(long, value_enum, default_value_t = Method::Profile)]
        method: Method,
        /// Most transition tables the exhaustive method may enumerate.
        #[arg(long, default_value_t = chain_parity::search::DEFAULT_TABLE_BUDGET)]
        budget: u128,
        /// Most search nodes the profile method may visit.
        #[arg(long, default_value_t = chain_parity::search::DEFAULT_NODE_BUDGET)]
        node_budget: u64,
        /// Disable dominance pruning and rotation symmetry.
        #[arg(long)]
        no_prune: bool,
        /// Run even when K is not a power of two. Results are exploratory.
        #[arg(long)]
        allow_non_power_of_two: bool,
    },
    /// Run the qubit chain with every hop done by teleportation.
    Teleport {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        trials: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::LemmaCheck { .. } => "lemma-check",
            Command::Quantum { .. } => "quantum",
            Command::Rod { .. } => "rod",
            Command::Verify { .. } => "verify",
            Command::Search { .. } => "search",
            Command::Teleport { .. } => "teleport",
        }
    }
}

pub mod exit {
    pub const INTERNAL: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const IO: u8 = 3;
    pub const MALFORMED: u8 = 4;
    pub const BUDGET: u8 = 5;
    pub const CLAIM_FAILED: u8 = 6;
    pub const INDETERMINATE: u8 = 7;
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: exit::USAGE,
            kind: "usage",
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, err: io::Error) -> Self {
        CliError {
            code: exit::IO,
            kind: "io",
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl From<chain_parity::Error> for CliError {
    fn from(err: chain_parity::Error) -> Self {
        use chain_parity::Error as E;
        let (code, kind) = match &err {
            E::InvalidArgument(_) | E::UnsupportedSize { .. } => (exit::USAGE, "usage"),
            E::Io(_) => (exit::IO, "io"),
            E::Json(_) | E::Validation(_) | E::Promise { .. } | E::Quantization { .. } => {
                (exit::MALFORMED, "malformed-input")
            }
            E::Budget { .. } => (exit::BUDGET, "budget"),
            E::Indeterminate { .. } => (exit::INDETERMINATE, "indeterminate"),
            E::Undecidable { .. } => (exit::INTERNAL, "undecidable"),
        };
        CliError {
            code,
            kind,
            message: err.to_string(),
        }
    }
}

/// What a subcommand hands back for rendering.
pub struct Rendered {
    /// Whether every claim in the result is backed by a proof rather than
    /// being an exploratory observation.
    pub asserted: bool,
    pub result: Value,
    pub csv: Vec<u8>,
    /// Exit status after the report is written.
    pub status: u8,
}

#[derive(Serialize)]
struct Report<'a> {
    config: &'a Cli,
    asserted: bool,
    result: &'a Value,
}

fn emit(cli: &Cli, rendered: &Rendered) -> Result<(), CliError> {
    let bytes = match cli.format {
        Format::Json => {
            let report = Report {
                config: cli,
                asserted: rendered.asserted,
                result: &rendered.result,
            };
            let mut text = serde_json::to_string_pretty(&report).map_err(|e| CliError {
                code: exit::INTERNAL,
                kind: "internal",
                message: e.to_string(),
            })?;
            text.push('\n');
            text.into_bytes()
        }
        Format::Csv => rendered.csv.clone(),
    };
    match &cli.output {
        Some(path) => fs::write(path, bytes).map_err(|e| CliError::io(path, e)),
        None => io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::io(std::path::Path::new("<stdout>"), e)),
    }
}

fn write_metadata(cli: &Cli, started: SystemTime, elapsed: f64, status: u8) -> Result<(), CliError> {
    let Some(path) = &cli.metadata else {
        return Ok(());
    };
    let started = started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let meta = json!({
        "subcommand": cli.command.name(),
        "started_unix_seconds": started,
        "elapsed_seconds": elapsed,
        "exit_code": status,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n";
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn report_error(err: &CliError) -> ExitCode {
    let body = json!({
        "error": {
            "kind": err.kind,
            "message": err.message,
            "exit_code": err.code,
        }
    });
    eprintln!("{body}");
    ExitCode::from(err.code)
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    if cli.workers == 0 {
        return Err(CliError::usage("--workers must be at least 1"));
    }
    let started = SystemTime::now();
    let clock = Instant::now();
    let rendered = commands::dispatch(cli)?;
    emit(cli, &rendered)?;
    write_metadata(cli, started, clock.elapsed().as_secs_f64(), rendered.status)?;
    Ok(rendered.status)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if !err.use_stderr() => {
            // --help and --version.
            let _ = err.print();
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            let message = err.render().to_string();
            return report_error(&CliError::usage(message.trim_end()));
        }
    };
    match run(&cli) {
        Ok(status) => ExitCode::from(status),
        Err(err) => report_error(&err),
    }
}
