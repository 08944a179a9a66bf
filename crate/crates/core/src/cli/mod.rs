//! The `pomdp` command-line harness.
//!
//! `run` executes seeded episodes and writes newline-delimited JSON records,
//! `solve` dumps value-iteration alpha vectors for a `.pomdp` file,
//! `validate` checks a `.pomdp` file and `list-domains` prints the registry.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod config;
mod run;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::domains::DOMAINS;
use crate::model::Discount;
use crate::pomdp_format::{parse_pomdp_file, validate_pomdp_text, FilePomdp};
use crate::solvers::{tabular_value_iteration, TabularModel, DEFAULT_VECTOR_CAP};

pub use config::{BeliefKind, DomainSource, FileConfig, RunConfig, SolverKind};
pub use run::cmd_run;

/// Failure of a subcommand, mapped to an exit code.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pomdp", version, about = "Run, solve and validate POMDPs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run seeded episodes and write one JSON record per episode plus a summary.
    Run(RunArgs),
    /// Print the alpha vectors of exact value iteration for a `.pomdp` file.
    Solve(SolveArgs),
    /// Check a `.pomdp` file and report each check.
    Validate(ValidateArgs),
    /// List registered domains with their parameters and supported solvers.
    ListDomains,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML file with run settings; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Registered domain id.
    #[arg(long)]
    pub domain: Option<String>,
    /// `.pomdp` file to load instead of a registered domain.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// pouct, pomcp, vi or random.
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simulations per planning call.
    #[arg(long)]
    pub sims: Option<usize>,
    /// Wall-clock budget per planning call; replaces `--sims`.
    #[arg(long)]
    pub time_budget_ms: Option<u64>,
    #[arg(long)]
    pub depth: Option<usize>,
    /// UCB1 exploration constant.
    #[arg(long)]
    pub ucb_c: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// exact, particles-reject or particles-weighted.
    #[arg(long)]
    pub belief: Option<String>,
    #[arg(long)]
    pub particles: Option<usize>,
    /// Value-iteration horizon.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Domain parameter override, `name=value`; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    /// Output path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Add per-step planning times to episode records (output is then no
    /// longer reproducible byte for byte).
    #[arg(long)]
    pub record_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub file: PathBuf,
    #[arg(long)]
    pub horizon: usize,
    /// Overrides the file's discount.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Largest vector count allowed at any horizon.
    #[arg(long, default_value_t = DEFAULT_VECTOR_CAP)]
    pub cap: u128,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub file: PathBuf,
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = io::stdout();
    let result = match cli.command {
        Command::Run(args) => RunConfig::resolve(&args).and_then(|cfg| match &cfg.out {
            Some(path) => {
                let file = fs::File::create(path)
                    .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))?;
                let mut w = io::BufWriter::new(file);
                cmd_run(&cfg, &mut w)
            }
            None => cmd_run(&cfg, &mut stdout.lock()),
        }),
        Command::Solve(args) => cmd_solve(&args, &mut stdout.lock()),
        Command::Validate(args) => cmd_validate(&args, &mut stdout.lock()),
        Command::ListDomains => cmd_list_domains(&mut stdout.lock()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn io_error(e: io::Error) -> CliError {
    CliError::Runtime(format!("write failed: {e}"))
}

fn read_file(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

/// Writes `Γ_horizon`, one vector per line: the action name, then the
/// components in state order.
pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let text = read_file(&args.file)?;
    let model = parse_pomdp_file(&text)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", args.file.display())))?;
    let discount = Discount::new(args.gamma.unwrap_or(model.discount))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let file = FilePomdp::new(model.clone());
    let tables = TabularModel::from_models(file.states(), file.actions(), file.observations(), &file, &file, &file);
    let alphas = tabular_value_iteration(&tables, discount, args.horizon, args.cap)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    for alpha in &alphas {
        let values: Vec<String> = alpha.values.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{} {}", model.actions[alpha.action.0], values.join(" ")).map_err(io_error)?;
    }
    out.flush().map_err(io_error)
}

/// Prints `name: pass` or `name: FAIL (...)` per check; fails if any check does.
pub fn cmd_validate(args: &ValidateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let text = read_file(&args.file)?;
    let report = validate_pomdp_text(&text);
    let line = |name: &str, outcome: &Result<(), crate::pomdp_format::ParseError>| match outcome {
        Ok(()) => format!("{name}: pass"),
        Err(e) => format!("{name}: FAIL ({e})"),
    };
    writeln!(out, "{}", line("syntax", &report.syntax)).map_err(io_error)?;
    for check in &report.checks {
        writeln!(out, "{}", line(check.name, &check.outcome)).map_err(io_error)?;
    }
    out.flush().map_err(io_error)?;
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!("{} failed validation", args.file.display())))
    }
}

pub fn cmd_list_domains(out: &mut dyn Write) -> Result<(), CliError> {
    for d in DOMAINS {
        writeln!(out, "{}: {}", d.id, d.description).map_err(io_error)?;
        writeln!(out, "  solvers: {}", d.solvers.join(", ")).map_err(io_error)?;
        writeln!(out, "  beliefs: {} (default {})", d.beliefs.join(", "), d.default_belief).map_err(io_error)?;
        for p in d.params {
            writeln!(out, "  --param {}={}  {}", p.name, p.default, p.help).map_err(io_error)?;
        }
    }
    writeln!(out, "(any .pomdp file via --file; solvers pouct, pomcp, vi, random)").map_err(io_error)?;
    out.flush().map_err(io_error)
}
