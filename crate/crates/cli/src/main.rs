//! `curvflow`: run surface flows, measure meshes, check analytic cases and
//! plot metrics.
//!
//! Exit codes: 0 success, 1 usage/schema/IO error, 2 numerical singularity
//! (or, for `oracle`, a failed case).

mod config;
mod error;
mod flow_cmd;
mod manifest;
mod metrics_cmd;
mod oracle_cmd;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "curvflow", version, about = "Mean-curvature, heat and conformalized mean-curvature flow on triangle meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve a mesh and write snapshots, a metrics CSV and a manifest.
    Flow(FlowArgs),
    /// Compare evolved meshes against a reference mesh.
    Metrics(MetricsArgs),
    /// Check discrete flows against closed-form radius evolutions.
    Oracle(OracleArgs),
    /// Plot convergence, conformality and sphericity from metrics CSVs.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct FlowArgs {
    /// Input mesh (.obj, .off or .ply).
    #[arg(long, conflicts_with = "shape")]
    pub input: Option<PathBuf>,
    /// Generated shape, e.g. `icosphere:3`, `dumbbell:default`,
    /// `cylinder:r=1,h=6,nt=64,nz=48,caps=1`.
    #[arg(long)]
    pub shape: Option<String>,
    /// TOML config or a previous run's manifest.json; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// mcf, heat or cmcf.
    #[arg(long)]
    pub flow: Option<String>,
    /// Time step (required, positive).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Number of steps [default: 512].
    #[arg(long)]
    pub steps: Option<usize>,
    /// Rescale to unit area after each step: on or off [default: on].
    #[arg(long)]
    pub normalize: Option<String>,
    /// Translate the barycenter to the origin after each step: on or off
    /// [default: on].
    #[arg(long)]
    pub recenter: Option<String>,
    /// none or fixed [default: none].
    #[arg(long)]
    pub boundary: Option<String>,
    /// Pin vertices whose triangles have collapsed (mcf only).
    #[arg(long)]
    pub freeze_collapsed: bool,
    /// Clamp negative cotangent weights at zero.
    #[arg(long)]
    pub clamp_cotangents: bool,
    /// pow2, every:K, list:A,B,... or none [default: pow2].
    #[arg(long)]
    pub snapshots: Option<String>,
    /// Snapshot format: obj, off or ply [default: obj].
    #[arg(long)]
    pub format: Option<String>,
    /// direct or cg [default: direct].
    #[arg(long)]
    pub solver: Option<String>,
    /// Stop once the largest per-step vertex displacement drops below this.
    #[arg(long)]
    pub stop_eps: Option<f64>,
    /// Basename for output files [default: input stem or shape kind].
    #[arg(long)]
    pub name: Option<String>,
    /// Output directory.
    #[arg(long, env = "CURVFLOW_OUT", default_value = "curvflow-out")]
    pub out: PathBuf,
    /// Metrics CSV path [default: OUT/NAME_metrics.csv].
    #[arg(long)]
    pub metrics_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Rest mesh.
    #[arg(long)]
    pub reference: PathBuf,
    /// Evolved meshes sharing the reference connectivity.
    #[arg(required = true)]
    pub meshes: Vec<PathBuf>,
    /// Output CSV [default: stdout].
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct OracleArgs {
    /// Shapes to check: sphere, cylinder, catenoid [default: all].
    #[arg(long, value_delimiter = ',')]
    pub cases: Vec<String>,
    /// Flows to check: mcf, heat, cmcf [default: all].
    #[arg(long, value_delimiter = ',')]
    pub flows: Vec<String>,
    /// Time step.
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Worker threads [default: logical cores].
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Per-step comparison CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Metrics CSV; repeat to overlay runs.
    #[arg(long, required = true)]
    pub csv: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, env = "CURVFLOW_OUT", default_value = "curvflow-out")]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Flow(args) => flow_cmd::run(args),
        Command::Metrics(args) => metrics_cmd::run(args),
        Command::Oracle(args) => oracle_cmd::run(args),
        Command::Plot(args) => plot::run(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Usage(_) = e {
                eprintln!("\nFor more information, try '--help'.");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
