use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use multiprod::kernels::KernelKind;
use multiprod::numerics::Precision;
use multiprod::nystrom::Method;
use multiprod::problems::{ProblemName, Split};

#[derive(Debug, Parser)]
#[command(name = "multiprod", version, about = "Multi-product splitting integrators")]
pub struct Cli {
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print nodes and exact weights, one `k <tab> num/den <tab> decimal` row each.
    Coeffs(CoeffsArgs),
    /// One explicit Nyström-type step of a radial problem.
    Step(StepArgs),
    /// Trajectory of an expansion scheme as CSV.
    Integrate(IntegrateArgs),
    /// Error against step size with a fitted order.
    Convergence(ConvergenceArgs),
    /// Figure data as CSV.
    Figure(FigureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ParityArg {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    T1,
    Ab,
    Ba,
    Midpoint,
    Odd,
}

impl KernelArg {
    /// Kernel for an even scheme; `None` for the odd basis.
    pub fn even_kernel(self) -> Option<KernelKind> {
        match self {
            KernelArg::T1 => Some(KernelKind::T1),
            KernelArg::Ab => Some(KernelKind::StrangAB),
            KernelArg::Ba => Some(KernelKind::StrangBA),
            KernelArg::Midpoint => Some(KernelKind::FrozenMidpoint),
            KernelArg::Odd => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    Double,
    Extended,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::Double => Precision::Double,
            PrecisionArg::Extended => Precision::Extended,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// One expansion per width `h` from the initial state.
    Local,
    /// Endpoint error after refining the step count.
    Global,
    /// Largest error strictly inside the interval.
    Interior,
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    #[arg(long)]
    pub parity: Option<ParityArg>,
    /// Number of nodes in the standard sequence.
    #[arg(long)]
    pub n: Option<u32>,
    /// Explicit nodes, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub ks: Option<Vec<u32>>,
    /// Final-correction node set `{m, n-1, .., 1}`.
    #[arg(long)]
    pub final_m: Option<u32>,
    /// Significant digits in the decimal column.
    #[arg(long, default_value_t = 20)]
    pub digits: u32,
}

#[derive(Debug, Args)]
pub struct SchemeArgs {
    /// Order `2n` selects the even scheme, `2n - 1` the odd one.
    #[arg(long)]
    pub order: Option<u32>,
    #[arg(long)]
    pub parity: Option<ParityArg>,
    /// Explicit nodes, comma separated; overrides --order.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub ks: Option<Vec<u32>>,
    #[arg(long)]
    pub kernel: Option<KernelArg>,
    /// Apply the expansion only at the end of blocks of this many substeps.
    #[arg(long)]
    pub final_m: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub problem: Option<ProblemName>,
    /// Splitting of the matrix problem.
    #[arg(long)]
    pub split: Option<Split>,
    /// Start hydrogen at zero with the regularized first kick.
    #[arg(long)]
    pub regularized: bool,
    /// Problem description file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StepArgs {
    #[arg(long)]
    pub method: Method,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub h: String,
    /// Start time; the state there is the exact solution.
    #[arg(long)]
    pub t0: Option<String>,
    #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
    pub precision: PrecisionArg,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
    #[arg(long)]
    pub t0: Option<String>,
    /// End time; defaults to the end of the problem's domain.
    #[arg(long)]
    pub t1: Option<String>,
    #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
    pub precision: PrecisionArg,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Local)]
    pub mode: ModeArg,
    /// Step widths for local mode, strictly decreasing.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub hs: Option<Vec<String>>,
    /// Step counts for global and interior modes, strictly increasing.
    #[arg(long = "step-counts", value_delimiter = ',', num_args = 1..)]
    pub step_counts: Option<Vec<usize>>,
    #[arg(long)]
    pub t1: Option<String>,
    #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
    pub precision: PrecisionArg,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(value_parser = clap::value_parser!(u32).range(1..=3))]
    pub which: u32,
    #[arg(long, default_value_t = multiprod::harness::DEFAULT_GRID_POINTS)]
    pub points: usize,
    /// Expansion orders (figures 2 and 3).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub orders: Option<Vec<u32>>,
    /// Working precision (figure 2).
    #[arg(long, value_enum)]
    pub precision: Option<PrecisionArg>,
}
