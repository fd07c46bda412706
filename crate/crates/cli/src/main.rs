//! `dssbound` command-line tool.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dssbound::lp::{Arithmetic, FreeParam, Mode};

/// Exit status for a failed check.
const EXIT_CHECK_FAILED: u8 = 1;
/// Exit status for bad arguments or parameters.
const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "dssbound", version, about = "LP outer bounds for exact-repair distributed storage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Upper bound on the storable rate at fixed alpha and beta.
    Bound(BoundArgs),
    /// Minimum of alpha or beta for a given rate, over a grid of the other.
    Tradeoff(TradeoffArgs),
    /// Column counts and representative lists of the reduced program.
    Dims(DimsArgs),
    /// Randomized symmetry checks and code-table verification.
    Verify(VerifyArgs),
    /// Write the linear program in CPLEX LP format.
    Export(ExportArgs),
}

#[derive(Args, Debug, Clone)]
struct Shape {
    /// Number of storage nodes.
    #[arg(long)]
    n: u8,
    /// Nodes needed to reconstruct the source.
    #[arg(long)]
    k: u8,
    /// Helpers contacted during a repair.
    #[arg(long)]
    d: u8,
}

#[derive(Args, Debug, Clone)]
struct Solver {
    #[arg(long, value_enum, default_value_t = ModeArg::Reduced)]
    mode: ModeArg,
    /// Defaults to exact for reduced programs and float for unreduced ones.
    #[arg(long, value_enum)]
    arithmetic: Option<ArithmeticArg>,
}

impl Solver {
    fn mode(&self) -> Mode {
        match self.mode {
            ModeArg::Reduced => Mode::Reduced,
            ModeArg::Unreduced => Mode::Unreduced,
        }
    }

    fn arithmetic(&self) -> Arithmetic {
        match (self.arithmetic, self.mode) {
            (Some(ArithmeticArg::Exact), _) | (None, ModeArg::Reduced) => Arithmetic::Exact,
            (Some(ArithmeticArg::Float), _) | (None, ModeArg::Unreduced) => Arithmetic::Float,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct Output {
    /// Output file; relative paths resolve against $DSSBOUND_OUT_DIR when set.
    /// Defaults to standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ModeArg {
    Reduced,
    Unreduced,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ArithmeticArg {
    Exact,
    Float,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum FreeArg {
    Alpha,
    Beta,
}

impl From<FreeArg> for FreeParam {
    fn from(f: FreeArg) -> Self {
        match f {
            FreeArg::Alpha => FreeParam::Alpha,
            FreeArg::Beta => FreeParam::Beta,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[command(flatten)]
    shape: Shape,
    /// Storage per node, as an integer, fraction `p/q`, or exact decimal.
    #[arg(long)]
    alpha: String,
    /// Repair bandwidth per helper link.
    #[arg(long)]
    beta: String,
    #[command(flatten)]
    solver: Solver,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct TradeoffArgs {
    #[command(flatten)]
    shape: Shape,
    /// Parameter to minimize; the other one is swept over the grid.
    #[arg(long, value_enum)]
    free: FreeArg,
    /// Values of the fixed parameter: a comma list (`1/4,1/2,1`) or
    /// `lo:hi:count` for evenly spaced points including both ends.
    #[arg(long)]
    grid: String,
    /// Required source entropy.
    #[arg(long, default_value = "1")]
    rate: String,
    #[command(flatten)]
    solver: Solver,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct DimsArgs {
    #[command(flatten)]
    shape: Shape,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Code table (JSON) to verify instead of the built-in (3,2,2) parity code.
    #[arg(long)]
    code: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Number of randomized relabeling trials.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[command(flatten)]
    shape: Shape,
    #[arg(long)]
    alpha: String,
    #[arg(long)]
    beta: String,
    /// Export the tradeoff program minimizing this parameter instead of the
    /// rate program.
    #[arg(long, value_enum)]
    free: Option<FreeArg>,
    #[arg(long, default_value = "1")]
    rate: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Reduced)]
    mode: ModeArg,
    #[command(flatten)]
    output: Output,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let started = std::time::Instant::now();
    let result = match cli.command {
        Command::Bound(a) => commands::bound(&a),
        Command::Tradeoff(a) => commands::tradeoff(&a),
        Command::Dims(a) => commands::dims(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Export(a) => commands::export(&a),
    };
    eprintln!("wall time: {:.3} s", started.elapsed().as_secs_f64());
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECK_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                commands::CliError::Usage(_) => EXIT_USAGE,
                commands::CliError::Failed(_) => EXIT_CHECK_FAILED,
            })
        }
    }
}
