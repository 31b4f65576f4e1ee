//! Command-line front end: expression parsers, run configuration, target
//! resolution, command dispatch and JSON reports.
//!
//! [`run`] executes one command line in-process and returns the exit code with
//! the text destined for stdout and stderr; the binary only prints it.

// Negated comparisons keep NaN on the failing side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod commands;
pub mod config;
pub mod nc;
pub mod parse;
pub mod report;
pub mod targets;

pub use config::{RunConfig, Thresholds};
pub use parse::{parse_ncexpr, parse_potential, NCExpr, ParseError, PotentialExpr};

use clap::{Args, Parser, Subcommand, ValueEnum};
use report::{ErrorBody, ErrorReport};
use serde::Serialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Core(#[from] freestein_core::Error),
    #[error(transparent)]
    Algebra(#[from] freestein_algebra::AlgebraError),
    #[error("cannot write {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Usage(_) => "UsageError",
            Self::Parse(e) => e.kind(),
            Self::Config(_) => "ConfigError",
            Self::Core(e) => e.kind(),
            Self::Algebra(e) => e.kind(),
            Self::Io { .. } => "IoError",
        }
    }

    /// 2 for malformed input, 1 for failures during computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Parse(_) | Self::Config(_) => 2,
            Self::Core(_) | Self::Algebra(_) | Self::Io { .. } => 1,
        }
    }

    fn report(&self) -> ErrorReport {
        let position = match self {
            Self::Parse(e) => Some(e.position()),
            _ => None,
        };
        ErrorReport { error: ErrorBody { kind: self.kind().into(), message: self.to_string(), position } }
    }
}

#[derive(Debug, Parser)]
#[command(name = "freestein", version, about = "Free Stein kernels, moment maps and free calculus")]
pub struct Cli {
    /// Configuration file (JSON); defaults to $FREESTEIN_CONFIG.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Artifact path (measure/map JSON, kernel CSV, or the report for checks).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// CSV path for a density grid `x,density,cdf`.
    #[arg(long, global = true)]
    pub grid_out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium measure of a convex polynomial potential.
    Gibbs {
        /// Potential, e.g. "0.5*x^2 + 0.25*x^4".
        expr: Option<String>,
        /// Potential, as an alternative to the positional form.
        #[arg(long)]
        potential: Option<String>,
        /// Schwinger-Dyson test degree.
        #[arg(long)]
        degree: Option<u32>,
    },
    /// Free moment map of a centered target measure.
    MomentMap {
        /// Target measure: a measure file or builtin:<name>.
        #[arg(long)]
        target: String,
        /// Fixed-point tolerance on sup |u'_{k+1} - u'_k|.
        #[arg(long)]
        tol: Option<f64>,
        /// Damping factor of the fixed-point update, in (0, 1].
        #[arg(long)]
        damping: Option<f64>,
        /// Iteration cap of the fixed-point solve.
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Moment Stein kernel, discrepancy and the W2 bound.
    Stein {
        /// Target measure: a measure file or builtin:<name>.
        #[arg(long)]
        target: String,
        /// Build the transported kernel for this potential.
        #[arg(long)]
        wrt: Option<String>,
        /// Points per axis of the kernel CSV written to --out.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Quadratic Wasserstein distance and maximal correlation.
    Distance {
        /// First measure.
        #[arg(long)]
        from: String,
        /// Second measure.
        #[arg(long, default_value = "builtin:semicircle")]
        to: String,
    },
    /// Free additive convolution of two measures, or a free convolution power.
    Convolve {
        /// Left summand.
        #[arg(long)]
        left: String,
        /// Right summand.
        #[arg(long, conflicts_with = "power")]
        right: Option<String>,
        /// Free convolution power t >= 1 of the left measure.
        #[arg(long)]
        power: Option<f64>,
    },
    /// Exact noncommutative calculus.
    Nc(nc::NcArgs),
    /// Verify an identity or inequality; exit 0 iff it holds.
    Check(CheckArgs),
    /// Print the JSON Schema of a report.
    Schema {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(report::SCHEMA_NAMES))]
        name: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    SchwingerDyson,
    Contraction,
    Caffarelli,
    Clt,
    Stability,
    KahlerEinstein,
    Dirichlet,
    Eigen,
    Stationarity,
    Langevin,
    Poincare,
    BrascampLieb,
    WeightedPoincare,
    BakryEmery,
    Bochner,
    BakryEmeryOu,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub kind: CheckKind,
    /// Convex polynomial potential, e.g. "0.5*x^2+0.25*x^4".
    #[arg(long)]
    pub potential: Option<String>,
    /// Target measure: a measure file or builtin:<name>.
    #[arg(long)]
    pub target: Option<String>,
    /// Test degree for identities.
    #[arg(long)]
    pub degree: Option<u32>,
    /// Largest polynomial degree of the test functions.
    #[arg(long)]
    pub max_degree: Option<usize>,
    /// Largest basis index for bochner and bakry-emery-ou.
    #[arg(long)]
    pub max_n: Option<usize>,
    /// Inequality constant (free Poincare, Bakry-Emery).
    #[arg(long)]
    pub constant: Option<f64>,
    /// Sample sizes for the CLT experiment.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<u32>,
    /// Report failed hypotheses instead of rejecting the input.
    #[arg(long)]
    pub report_only: bool,
}

/// Result of one command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Report plus the verdict that decides the exit code.
pub struct Output {
    pub report: serde_json::Value,
    pub pass: bool,
}

impl Output {
    pub fn new<T: Serialize>(report: &T, pass: bool) -> Self {
        Self { report: serde_json::to_value(report).expect("reports serialize"), pass }
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })
}

pub(crate) fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

/// Context shared by every command.
pub struct Ctx {
    pub config: RunConfig,
    pub out: Option<PathBuf>,
    pub grid_out: Option<PathBuf>,
}

fn dispatch(cli: Cli) -> Result<Output, CliError> {
    let config = RunConfig::load(cli.config.as_deref())?;
    let ctx = Ctx { config, out: cli.out, grid_out: cli.grid_out };
    match cli.command {
        Command::Gibbs { expr, potential, degree } => {
            let src = match (expr, potential) {
                (Some(e), None) | (None, Some(e)) => e,
                (Some(_), Some(_)) => return Err(CliError::Usage("give the potential once".into())),
                (None, None) => return Err(CliError::Usage("missing potential expression".into())),
            };
            commands::gibbs(&ctx, &src, degree)
        }
        Command::MomentMap { target, tol, damping, max_iter } => {
            let mut ctx = ctx;
            if let Some(t) = tol {
                ctx.config.moment_tol = t;
            }
            if let Some(d) = damping {
                ctx.config.damping = d;
            }
            if let Some(m) = max_iter {
                ctx.config.max_iter = m;
            }
            ctx.config.validate()?;
            commands::moment_map(&ctx, &target)
        }
        Command::Stein { target, wrt, grid } => {
            let mut ctx = ctx;
            if let Some(g) = grid {
                ctx.config.kernel_grid = g;
            }
            ctx.config.validate()?;
            commands::stein(&ctx, &target, wrt.as_deref())
        }
        Command::Distance { from, to } => commands::distance(&ctx, &from, &to),
        Command::Convolve { left, right, power } => commands::convolve(&ctx, &left, right.as_deref(), power),
        Command::Nc(args) => nc::run(&ctx, &args),
        Command::Check(args) => check::run(&ctx, &args),
        Command::Schema { name } => {
            let s = report::schema(&name).ok_or_else(|| CliError::Usage(format!("unknown schema {name:?}")))?;
            Ok(Output { report: s, pass: true })
        }
    }
}

/// Runs one command line (including the program name).
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome { code: 0, stdout: text, stderr: String::new() },
                _ => Outcome { code: 2, stdout: String::new(), stderr: text },
            };
        }
    };
    match dispatch(cli) {
        Ok(out) => {
            Outcome { code: if out.pass { 0 } else { 1 }, stdout: pretty(&out.report) + "\n", stderr: String::new() }
        }
        Err(e) => Outcome { code: e.exit_code(), stdout: pretty(&e.report()) + "\n", stderr: format!("error: {e}\n") },
    }
}
