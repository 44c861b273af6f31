//! The `treepath` command-line surface.
//!
//! Exit codes: 0 success, 1 invalid arguments, 2 numerical or guard
//! failure (including aborted replicates), 3 verification failure.

mod commands;
pub mod record;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::exact::CorollarySide;
use crate::montecarlo::Statistic;

pub use commands::{cmd_exact, cmd_simulate, cmd_sweep};
pub use record::{Meta, ResultItem, RunRecord};
pub use verify::cmd_verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "treepath",
    version,
    about = "Open and increasing paths on random N-ary trees"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed forms, recursions, bounds and exact laws.
    Exact(ExactArgs),
    /// Seeded Monte Carlo, optionally compared with a reference law.
    Simulate(SimulateArgs),
    /// Run the acceptance checks.
    Verify(VerifyArgs),
    /// Repeat an `exact` or `simulate` run over a range of one flag.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Branching number N.
    #[arg(short = 'N', long = "branching")]
    pub branching: Option<u32>,
    /// Depth n.
    #[arg(short = 'n', long = "depth")]
    pub depth: Option<u32>,
    /// Open probability p.
    #[arg(short = 'p', long = "prob")]
    pub prob: Option<f64>,
    /// Path length k, in edges.
    #[arg(short = 'k', long = "length")]
    pub length: Option<u32>,
}

impl ModelArgs {
    pub fn branching(&self) -> Result<u32> {
        self.branching
            .ok_or_else(|| Error::param("N", "missing -N/--branching"))
    }

    pub fn depth(&self) -> Result<u32> {
        self.depth.ok_or_else(|| Error::param("n", "missing -n/--depth"))
    }

    pub fn prob(&self) -> Result<f64> {
        self.prob.ok_or_else(|| Error::param("p", "missing -p/--prob"))
    }

    pub fn length(&self) -> Result<u32> {
        self.length.ok_or_else(|| Error::param("k", "missing -k/--length"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Output format (json by default; csv for sweep).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to FILE instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum What {
    /// First and second moments of Theta_n and the spanning lower bound.
    Moments,
    /// Q_1..Q_n of the no-path recursion.
    QCurve,
    /// Limit of P(Theta_n >= 1).
    Survival,
    /// Number of length-k descending paths.
    PathCount,
    /// Ordered pair counts a_m, their bounds and the B(m, j) profile.
    Overlap,
    /// E(T_{n,k}).
    ExpectedOpen,
    /// Upper bound on Var(T_{n,k}).
    VarianceBound,
    /// Limit of L_{N,n} / n.
    Lln,
    /// E of the number of increasing length-k paths.
    IncreasingMean,
    /// b_{N,n}, f_{N,n} and frac(f).
    Centering,
    /// N^n / Gamma(f + x + 1) against its Stirling equivalent.
    Gamma,
    /// Total-variation bound D(N, k).
    Tv,
    /// Three-value window prediction for the longest increasing path.
    Window,
    /// Two-point limit law along a subsequence.
    Corollary,
    /// Joint increase probability of two overlapping paths.
    Pair,
    /// Exact law of Theta_n.
    ThetaPmf,
    /// Exact law of the longest open run.
    LongestPmf,
}

#[derive(Debug, Clone, Args)]
pub struct ExactArgs {
    #[arg(long, value_enum)]
    pub what: What,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Offset x for --what gamma.
    #[arg(short = 'x', allow_negative_numbers = true)]
    pub x: Option<f64>,
    /// Subsequence parameter a for --what corollary.
    #[arg(long = "a")]
    pub a: Option<f64>,
    #[arg(long, value_enum)]
    pub side: Option<Side>,
    /// Shared-segment parameters for --what pair.
    #[arg(short = 's')]
    pub s: Option<u32>,
    #[arg(short = 't')]
    pub t: Option<u32>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    Low,
    High,
}

impl From<Side> for CorollarySide {
    fn from(s: Side) -> Self {
        match s {
            Side::Low => CorollarySide::Low,
            Side::High => CorollarySide::High,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatArg {
    Theta,
    Spanning,
    LongestOpen,
    LongestIncreasing,
    IncreasingCount,
}

impl From<StatArg> for Statistic {
    fn from(s: StatArg) -> Self {
        match s {
            StatArg::Theta => Statistic::Theta,
            StatArg::Spanning => Statistic::Spanning,
            StatArg::LongestOpen => Statistic::LongestOpen,
            StatArg::LongestIncreasing => Statistic::LongestIncreasing,
            StatArg::IncreasingCount => Statistic::IncreasingCount,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Reference {
    /// Exact law from the depth recursion (theta, longest-open).
    Dp,
    /// exp(-lambda) envelope (longest-increasing).
    PoissonWindow,
    None,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub stat: StatArg,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of replicates.
    #[arg(short = 'K', long = "samples", default_value_t = 1000)]
    pub samples: u64,
    /// Base seed; replicate i uses stream (seed, i).
    #[arg(long, env = "TREEPATH_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores). Never changes results.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long = "ref", value_enum, default_value_t = Reference::None)]
    pub reference: Reference,
    /// Confidence parameter of the DKW band.
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    /// Model slack added to the band (default 0 for dp, 0.03 for poisson-window).
    #[arg(long)]
    pub slack: Option<f64>,
    /// Per-replicate cap on vertex draws for theta and spanning.
    #[arg(long, default_value_t = crate::montecarlo::DEFAULT_WORK_CAP)]
    pub work_cap: u64,
    /// Include every replicate's value in the results.
    #[arg(long)]
    pub emit_samples: bool,
    /// Report progress on standard error.
    #[arg(long)]
    pub progress: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct VerifyArgs {
    /// Run only these checks (names or numbers, comma separated).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// Base seed for the Monte Carlo checks.
    #[arg(long, env = "TREEPATH_SEED")]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Deliberately corrupt one value per check (harness self-test).
    #[arg(long, hide = true)]
    pub inject_fault: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Long name of the flag to vary (branching, depth, prob, length, samples, seed, x, a).
    #[arg(long)]
    pub vary: String,
    /// Explicit values, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub values: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Space the range geometrically.
    #[arg(long)]
    pub log: bool,
    #[command(flatten)]
    pub output: OutputArgs,
    /// The run to repeat, after `--`.
    #[arg(last = true, required = true)]
    pub run: Vec<String>,
}

/// Runs one command and returns the record together with its exit code.
pub fn execute(command: Command) -> (Result<RunRecord>, i32) {
    match command {
        Command::Exact(a) => finish(cmd_exact(&a)),
        Command::Simulate(a) => finish(cmd_simulate(&a)),
        Command::Sweep(a) => finish(cmd_sweep(&a)),
        Command::Verify(a) => match cmd_verify(&a) {
            Ok((record, all_pass)) => (Ok(record), if all_pass { EXIT_OK } else { EXIT_VERIFY_FAILED }),
            Err(e) => {
                let code = e.exit_code();
                (Err(e), code)
            }
        },
    }
}

fn finish(r: Result<RunRecord>) -> (Result<RunRecord>, i32) {
    let code = match &r {
        Ok(_) => EXIT_OK,
        Err(e) => e.exit_code(),
    };
    (r, code)
}

fn output_of(command: &Command) -> (&OutputArgs, Format) {
    match command {
        Command::Exact(a) => (&a.output, Format::Json),
        Command::Simulate(a) => (&a.output, Format::Json),
        Command::Verify(a) => (&a.output, Format::Json),
        Command::Sweep(a) => (&a.output, Format::Csv),
    }
}

pub fn render(record: &RunRecord, format: Format) -> Result<String> {
    match format {
        Format::Json => record.to_json().map(|s| s + "\n"),
        Format::Csv => record.to_csv(),
        Format::Table => Ok(record.to_table()),
    }
}

/// Parses `args` (program name first), runs, writes output and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (output, default_format) = output_of(&cli.command);
    let (output, format) = (output.clone(), output.format.unwrap_or(default_format));
    let (record, code) = execute(cli.command);
    match record {
        Ok(record) => {
            let written = render(&record, format).and_then(|text| write_output(output.out.as_ref(), &text));
            match written {
                Ok(()) => code,
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            code
        }
    }
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::Numerical(format!("writing output: {e}"));
    match path {
        Some(p) => std::fs::write(p, text).map_err(io),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(io)?;
            out.flush().map_err(io)
        }
    }
}
