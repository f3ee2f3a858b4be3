//! `logsum` command-line front end.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "logsum", version, about = "Generate convex bodies and check log-Brunn–Minkowski type inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a body (or vertex flow) as JSON.
    Gen(GenArgs),
    /// Run one inequality check; exit 0 on PASS, 1 on FAIL.
    Check(CheckArgs),
    /// Scan a one-parameter family for log-concavity / log-convexity.
    Scan(ScanArgs),
    /// Run a check on random instances and rank them by margin.
    Hunt(HuntArgs),
    /// Operations on report files.
    Report {
        #[command(subcommand)]
        action: ReportCommand,
    },
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Combine report files into one; exit 1 if any report failed.
    Merge {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Sampling and discretization flags shared by the numerical commands.
#[derive(Args, Clone)]
pub struct Common {
    /// Monte-Carlo samples per estimate.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Direction-grid size (default 720 in 2-D, 2000 in 3-D).
    #[arg(long)]
    pub dirs: Option<usize>,
    /// `lebesgue`, `gaussian`, or a path to a density JSON file.
    #[arg(long, default_value = "lebesgue")]
    pub density: String,
    /// Standard deviation for `--density gaussian`.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum GenKind {
    Cube,
    Cross,
    BallPolygon,
    StripBox,
    SymVpoly,
    SymHpoly,
    Unconditional,
    TriangleCentroid,
    VertexFlow,
}

#[derive(Args)]
pub struct GenArgs {
    pub kind: GenKind,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Vertex, facet or point count (generator-specific default).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Circumradius for `ball-polygon`.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Comma-separated half-widths for `strip-box`.
    #[arg(long)]
    pub half_widths: Option<String>,
    /// Symmetric point pairs for `vertex-flow`.
    #[arg(long)]
    pub symmetric: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckName {
    LogBm,
    DualLogBm,
    DualQuermass,
    DualQuermassDim,
    TriangleLogbm,
    SimplexLowerBound,
    SectionContainment,
    GaussianDilates,
    MomentGap,
    IsotropyDerivative,
    VarianceBound,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct CheckArgs {
    pub name: CheckName,
    #[arg(long, visible_alias = "body")]
    pub k: Option<PathBuf>,
    #[arg(long)]
    pub l: Option<PathBuf>,
    /// Vertex-flow JSON file.
    #[arg(long)]
    pub flow: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1)]
    pub i: usize,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub s: f64,
    #[arg(long, default_value_t = 0.3)]
    pub r: f64,
    /// Unit direction for the isotropy derivative (default e₁).
    #[arg(long, value_parser = io::parse_list)]
    pub v: Option<Vec<f64>>,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-2)]
    pub h: f64,
    /// Section subspace basis, rows separated by `;` (default: the first
    /// n−1 coordinate axes).
    #[arg(long)]
    pub basis: Option<String>,
    #[arg(long, default_value_t = 64)]
    pub probes: usize,
    /// Override the reported tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Hunt report to replay an instance from (with --trial).
    #[arg(long, requires = "trial")]
    pub replay: Option<PathBuf>,
    #[arg(long)]
    pub trial: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ScanName {
    B,
    DualB,
    DualFamily,
    StripB,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct ScanArgs {
    pub name: ScanName,
    #[arg(long, visible_alias = "body")]
    pub k: Option<PathBuf>,
    #[arg(long)]
    pub l: Option<PathBuf>,
    /// Diagonal exponents (`b`) or a vertex-flow JSON file (`dual-b`).
    #[arg(long)]
    pub flow: Option<String>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long, default_value_t = 21)]
    pub steps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Strip direction (default: last coordinate axis).
    #[arg(long, value_parser = io::parse_list)]
    pub u: Option<Vec<f64>>,
    /// Monte-Carlo sphere quadrature for `dual-family` instead of the grid.
    #[arg(long)]
    pub quad_samples: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV path (default: the JSON path with a .csv extension).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
pub struct HuntArgs {
    #[arg(long)]
    pub check: String,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1)]
    pub i: usize,
    /// Worst instances kept in the report.
    #[arg(long, default_value_t = 20)]
    pub keep: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::Check(a) => commands::check(&a),
        Command::Scan(a) => commands::scan(&a),
        Command::Hunt(a) => commands::hunt(&a),
        Command::Report { action: ReportCommand::Merge { files, out } } => commands::merge(&files, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
