//! Command-line arguments.

use clap::{Args, Parser, Subcommand, ValueEnum};
use coframe_core::ParamEnv;

#[derive(Debug, Parser)]
#[command(name = "coframe", version, about = "Verify instanton families on cohomogeneity-one special-holonomy manifolds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the equation residuals of one family or of the whole catalog.
    Verify(VerifyArgs),
    /// Track the real branches of an implicit family.
    Branches(BranchArgs),
    /// Classify the flag phase over an integer grid of (a1, a3).
    PhaseGrid(PhaseArgs),
    /// Integrate an ODE family and overlay its reference solutions.
    Ode(OdeArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Family id.
    #[arg(long, conflicts_with = "all", required_unless_present = "all")]
    pub family: Option<String>,
    /// Every catalog family; families the parameters do not apply to are skipped.
    #[arg(long)]
    pub all: bool,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Relative residual tolerance.
    #[arg(long, default_value_t = 1e-9, help_heading = "Options")]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BranchArgs {
    #[arg(long)]
    pub family: String,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    /// Smallest value of a1 and a3.
    #[arg(long, default_value_t = -10, allow_negative_numbers = true)]
    pub min: i64,
    /// Largest value of a1 and a3.
    #[arg(long, default_value_t = 10, allow_negative_numbers = true)]
    pub max: i64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OdeArgs {
    #[arg(long, default_value = "bs_dspin7_ode")]
    pub family: String,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Local error tolerance of the adaptive integrator.
    #[arg(long, default_value_t = 1e-12, help_heading = "Options")]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parameter bindings; only flags given on the command line override family defaults.
#[derive(Debug, Args, Default)]
#[command(next_help_heading = "Parameters")]
pub struct ParamArgs {
    /// Bolt size parameter of the metric.
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Coefficient of θ1 in the connection.
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<f64>,
    /// Phase angle of the deformed equations.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Constant of the HYM equation.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Free integration constant.
    #[arg(long = "C0", allow_negative_numbers = true)]
    pub c0: Option<f64>,
    /// Integration constant.
    #[arg(long = "C1", allow_negative_numbers = true)]
    pub c1: Option<f64>,
    /// Integration constant.
    #[arg(long = "C2", allow_negative_numbers = true)]
    pub c2: Option<f64>,
    /// Integration constant.
    #[arg(long = "C3", allow_negative_numbers = true)]
    pub c3: Option<f64>,
    /// Integration constant.
    #[arg(long = "C4", allow_negative_numbers = true)]
    pub c4: Option<f64>,
    /// Flag connection coefficient on θ1.
    #[arg(long, allow_negative_numbers = true)]
    pub a1: Option<f64>,
    /// Flag connection coefficient on θ3.
    #[arg(long, allow_negative_numbers = true)]
    pub a3: Option<f64>,
    /// Sign choice (+1 or −1) for families with two explicit branches.
    #[arg(long, allow_negative_numbers = true)]
    pub branch: Option<f64>,
    /// Free constant of the series start of an ODE family.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
}

impl ParamArgs {
    pub fn env(&self) -> ParamEnv {
        let mut env = ParamEnv::new();
        let named = [
            ("c", self.c),
            ("k", self.k),
            ("theta", self.theta),
            ("lambda", self.lambda),
            ("C0", self.c0),
            ("C1", self.c1),
            ("C2", self.c2),
            ("C3", self.c3),
            ("C4", self.c4),
            ("a1", self.a1),
            ("a3", self.a3),
            ("branch", self.branch),
            ("a", self.a),
        ];
        for (name, v) in named {
            if let Some(v) = v {
                env.set(name, v);
            }
        }
        env
    }
}

#[derive(Debug, Args)]
#[command(next_help_heading = "Grid")]
pub struct GridArgs {
    /// Smallest radius; defaults to r0(1 + 1e-3), or 1e-2 when r0 = 0.
    #[arg(long)]
    pub rmin: Option<f64>,
    /// Largest radius.
    #[arg(long, default_value_t = 100.0)]
    pub rmax: f64,
    /// Number of grid points.
    #[arg(long, default_value_t = 400)]
    pub grid: usize,
    /// Log-spaced grid (the default).
    #[arg(long, conflicts_with = "linear")]
    pub log: bool,
    /// Evenly spaced grid.
    #[arg(long)]
    pub linear: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
#[command(next_help_heading = "Output")]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    /// Defaults to JSON for `verify` and CSV otherwise.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}
