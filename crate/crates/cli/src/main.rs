mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Cycle clustering of non-reversible Markov chains.
#[derive(Debug, Parser)]
#[command(name = "cyclust", version)]
struct Cli {
    /// Seed for every random draw of the run.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Directory receiving all outputs and the run manifest.
    #[arg(long, global = true, default_value = "cyclust-out")]
    out: PathBuf,
    /// Branch-and-bound configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a benchmark instance.
    Generate(GenerateArgs),
    /// Solve the cycle-clustering MIP by branch-and-bound.
    Solve(SolveArgs),
    /// Recompute the objective of a stored clustering.
    Verify(VerifyArgs),
    /// Exhaustive search for small instances.
    Oracle(ModelArgs),
    /// Write the MIP in LP text format.
    ExportLp(ModelArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Omega3,
    Omega4,
    Omega6,
    Repressilator,
    Triangle,
    MultiwayCut,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub kind: Kind,
    /// Drift magnitude (potentials).
    #[arg(long, default_value_t = 0.1)]
    pub drift: f64,
    /// Inverse temperature (potentials).
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// Trajectory length (potentials).
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    /// Number of bins (potentials).
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    /// Number of starting points (repressilator).
    #[arg(long, default_value_t = 200)]
    pub starts: usize,
    /// Simulated time (repressilator).
    #[arg(long, default_value_t = 1.5)]
    pub t_end: f64,
    /// Integrator step (repressilator).
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Vertex count of a random graph (multiway-cut).
    #[arg(long, default_value_t = 8)]
    pub vertices: usize,
    /// Terminal count of a random graph (multiway-cut).
    #[arg(long, default_value_t = 3)]
    pub terminals: usize,
    /// Edge probability of a random graph (multiway-cut).
    #[arg(long, default_value_t = 0.5)]
    pub edge_prob: f64,
    /// Reduce this graph instead of a random one (multiway-cut).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Coherence weight used by the reduction (multiway-cut).
    #[arg(long, default_value_t = cyclust_core::DEFAULT_ALPHA)]
    pub alpha: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    /// Transition (tm-v1) or flow (fm-v1) matrix.
    pub matrix: PathBuf,
    /// Number of clusters.
    #[arg(short, long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value_t = cyclust_core::DEFAULT_ALPHA)]
    pub alpha: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Wall-clock limit in seconds; overrides the config file.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Also write the model as `model.lp`.
    #[arg(long)]
    pub emit_lp: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    pub matrix: PathBuf,
    /// Clustering file (cc-v1).
    pub clustering: PathBuf,
}

pub struct Global {
    pub seed: u64,
    pub out: PathBuf,
    pub config: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let global = Global { seed: cli.seed, out: cli.out, config: cli.config };
    let result = match &cli.command {
        Command::Generate(a) => commands::generate(&global, a),
        Command::Solve(a) => commands::solve(&global, a),
        Command::Verify(a) => commands::verify(&global, a),
        Command::Oracle(a) => commands::oracle(&global, a),
        Command::ExportLp(a) => commands::export_lp(&global, a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
