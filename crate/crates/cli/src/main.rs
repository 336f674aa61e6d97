//! `owakm` command-line front end.
//!
//! Exit codes: 0 on success, 2 on malformed input, 3 when a size, capacity or
//! iteration limit stops the run.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "owakm", version, about = "OWA k-median and PAV solver toolkit")]
struct Cli {
    /// Output format; each command has a sensible default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Worker threads for trials and enumeration (1 = sequential).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// LP + dependent rounding, repeated over seeded trials.
    Solve(SolveArgs),
    /// Brute-force optimum.
    Exact(ExactArgs),
    /// Solve the LP relaxation, optionally exporting it as MPS.
    Lp(LpArgs),
    /// Round a fractional vector and report marginals.
    Round(RoundArgs),
    /// Per-interval approximation ratio table.
    Bound(BoundArgs),
    /// Generate instances.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Reduce to fault-tolerant k-median with multiplicities.
    Reduce(ReduceArgs),
    /// Minimisation PAV from approval ballots.
    Pav(PavArgs),
}

#[derive(Args, Debug)]
pub struct InstanceArg {
    /// Instance JSON file, `-` for stdin.
    #[arg(long, default_value = "-")]
    instance: String,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    input: InstanceArg,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Master seed; drawn at random and printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// `balanced`, `linear` or `file:<shape.json>`.
    #[arg(long, default_value = "balanced")]
    tree: String,
    /// Also compute the exact optimum when enumeration is small enough.
    #[arg(long)]
    exact: bool,
    /// Ratio histogram as two-column CSV.
    #[arg(long)]
    histogram: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    bins: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExactArgs {
    #[command(flatten)]
    input: InstanceArg,
    /// Enumerate in exact rational arithmetic.
    #[arg(long)]
    rational: bool,
    /// Largest number of committees to enumerate.
    #[arg(long, default_value_t = owakm::exact::DEFAULT_COMMITTEE_LIMIT)]
    limit: u128,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LpArgs {
    #[command(flatten)]
    input: InstanceArg,
    /// Write the LP in free MPS format.
    #[arg(long)]
    mps: Option<PathBuf>,
    /// Stop after writing the MPS file.
    #[arg(long, requires = "mps")]
    export_only: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RoundArgs {
    /// Comma-separated openings, decimals or `p/q`.
    #[arg(long)]
    y: String,
    #[arg(long, default_value = "balanced")]
    tree: String,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    #[arg(long, default_value_t = 88)]
    lmax: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum GenCommand {
    /// Random costs.
    Random(GenRandomArgs),
    /// Cities with free travel inside and unit cost between.
    Cities(GenCitiesArgs),
    /// Hard instance from exact cover by 3-sets.
    X3c(GenX3cArgs),
}

#[derive(Args, Debug)]
pub struct GenRandomArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// `harmonic`, `geometric:<p>`, `top_r:<r>` or `custom:<w1>,<w2>,...`.
    #[arg(long, default_value = "harmonic")]
    weights: String,
    /// `metric`, `nonmetric` or `approval:<density>`.
    #[arg(long, default_value = "nonmetric")]
    mode: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenCitiesArgs {
    /// Comma-separated city populations.
    #[arg(long)]
    pops: String,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "harmonic")]
    weights: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenX3cArgs {
    /// X3C file: `3n` on the first line, then one triple per line. `-` for stdin.
    #[arg(long, default_value = "-")]
    input: String,
    #[arg(long, default_value = "1/2")]
    lambda: String,
    /// Last positive weight index; defaults to floor(lambda k).
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    #[command(flatten)]
    input: InstanceArg,
    /// Check the cost identity on this many random committees.
    #[arg(long, default_value_t = 0)]
    verify: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PavArgs {
    /// One ballot per line, space-separated candidate indices.
    #[arg(long)]
    ballots: PathBuf,
    #[arg(long)]
    k: usize,
    /// Number of candidates; defaults to the largest index seen plus one.
    #[arg(long)]
    candidates: Option<usize>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    allow_empty: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let parallel = cli.jobs != Some(1);
    let result = match cli.command {
        Command::Solve(a) => commands::solve(a, cli.format, parallel),
        Command::Exact(a) => commands::exact(a, cli.format, parallel),
        Command::Lp(a) => commands::lp(a, cli.format),
        Command::Round(a) => commands::round(a, cli.format),
        Command::Bound(a) => commands::bound(a, cli.format),
        Command::Gen(g) => commands::gen(g, cli.format),
        Command::Reduce(a) => commands::reduce(a, cli.format),
        Command::Pav(a) => commands::pav(a, cli.format, parallel),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
