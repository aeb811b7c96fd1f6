use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use maxload_core::engine::DEFAULT_STATE_CEILING;

mod commands;
mod manifest;

use commands::CliError;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  internal error
  2  invalid input (arguments or input file)
  3  recurrence search exhausted without a certified operator
  4  resource ceiling refused (engine state ceiling, exact-path limit, oracle size)
  5  precision check failed (double-check agreement below 6 digits)";

#[derive(Debug, Parser)]
#[command(name = "maxload", version, about = "Exact maximum-load sequences, recurrences and constants", after_help = EXIT_CODES)]
pub struct Cli {
    /// Cap on worker threads for every parallel stage.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Refuse exact-engine runs whose projected state count exceeds this.
    #[arg(long, global = true, default_value_t = DEFAULT_STATE_CEILING)]
    ceiling: u64,
    /// Report format; `json` prints the artifact when no --out is given.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Exact,
    Modular,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorrectionsArg {
    /// Powers of 1/T.
    Integer,
    /// Powers of 1/sqrt(T).
    Half,
}

#[derive(Debug, Args)]
pub struct Spec {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    r: u32,
}

#[derive(Debug, Args)]
pub struct LadderArgs {
    /// First ladder point; later points double it [default: a multiple of n near 1024].
    #[arg(long)]
    t0: Option<u64>,
    /// Last index evaluated.
    #[arg(long, default_value_t = 1 << 20)]
    t_max: u64,
    /// Richardson depth.
    #[arg(long, default_value_t = maxload_core::asymptotics::DEFAULT_DEPTH)]
    depth: usize,
    #[arg(long, value_enum, default_value_t = CorrectionsArg::Integer)]
    corrections: CorrectionsArg,
    /// Fixed-point precision in bits for recurrence evaluation.
    #[arg(long, default_value_t = maxload_core::eval::DEFAULT_BITS)]
    bits: u32,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// A(n,r;T) for T = 1..t-max as a sequence file.
    Exact {
        #[command(flatten)]
        spec: Spec,
        #[arg(long)]
        t_max: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact distribution of the maximum occupancy after T rounds.
    Pmf {
        #[command(flatten)]
        spec: Spec,
        #[arg(long = "t")]
        rounds: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a recurrence annihilating a sequence file.
    Guess {
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        max_order: usize,
        #[arg(long, default_value_t = 12)]
        max_degree: usize,
        #[arg(long, default_value_t = maxload_core::guess::DEFAULT_HOLDOUT)]
        holdout: usize,
        #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
        solver: SolverArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Unroll a recurrence file to large T.
    Eval {
        input: PathBuf,
        #[arg(long)]
        t_max: u64,
        /// Indices to report (comma separated) [default: t-max].
        #[arg(long, value_delimiter = ',')]
        samples: Vec<u64>,
        /// Report the doubling ladder starting here instead of --samples.
        #[arg(long)]
        ladder: Option<u64>,
        /// Exact rational unrolling instead of fixed point.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = maxload_core::eval::DEFAULT_EXACT_LIMIT)]
        exact_limit: u64,
        #[arg(long, default_value_t = maxload_core::eval::DEFAULT_BITS)]
        bits: u32,
        #[arg(long)]
        no_double_check: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate C in A ~ C sqrt(T) from a recurrence, sequence or samples file.
    Cconst {
        input: PathBuf,
        #[command(flatten)]
        ladder: LadderArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo estimate of the expected maximum.
    Simulate {
        #[command(flatten)]
        spec: Spec,
        #[arg(long = "t")]
        rounds: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The heuristic constant (r/n) sqrt(pi ln n) ln(n/r).
    Heuristic {
        #[command(flatten)]
        spec: Spec,
    },
    /// Comparison table over several recurrence, sequence or samples files.
    Compare {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        ladder: LadderArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// exact -> guess -> eval -> cconst in one run.
    Pipeline {
        #[command(flatten)]
        spec: Spec,
        /// Terms to compute first; doubled until a recurrence is certified.
        #[arg(long, default_value_t = 30)]
        terms: usize,
        #[arg(long, default_value_t = 240)]
        max_terms: usize,
        #[arg(long, default_value_t = 9)]
        max_order: usize,
        #[arg(long, default_value_t = 12)]
        max_degree: usize,
        #[arg(long, default_value_t = 15)]
        holdout: usize,
        #[command(flatten)]
        ladder: LadderArgs,
        /// Directory receiving every intermediate artifact.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let CliError::Exhausted { trace, .. } = &e {
                eprint!("{trace}");
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
