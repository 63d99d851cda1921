use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cyclust_core::cycle::ClusteringError;
use cyclust_core::gen::hmc::{hmc_instance, HmcParams, Potential};
use cyclust_core::gen::multiway::{multiway_cut_to_instance, random_multiway_cut};
use cyclust_core::gen::repressilator::{repressilator_instance, RepressilatorSetup};
use cyclust_core::gen::triangle::triangle_fixture;
use cyclust_core::gen::GenError;
use cyclust_core::io::{
    format_clustering, format_flow_matrix, format_multiway_cut, format_transition_matrix, parse_clustering,
    parse_matrix, parse_multiway_cut, write_points_csv, ClusteringFile, FormatError, MatrixFile,
};
use cyclust_core::markov::{project, stationary_distribution, MarkovError, DEFAULT_STATIONARY_MAX_ITER};
use cyclust_core::mip::{export_model, MipError};
use cyclust_core::solver::{branch_and_bound, brute_force, BnbConfig, SolveResult, SolveStatus, SolverError};
use cyclust_core::{build_mip, flow_matrix, objective, FlowMatrix, ObjectiveValue};
use serde::Serialize;

use crate::manifest::Run;
use crate::{GenerateArgs, Global, Kind, ModelArgs, SolveArgs, VerifyArgs};

/// Tight enough that the Δ checks of `verify` are not limited by π.
const STATIONARY_TOL: f64 = 1e-12;
const VERIFY_TOL: f64 = 1e-6;

/// Usage or model problem reported by the CLI itself.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// 2 for malformed input or an invalid model, 1 for everything else.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    let model_error = e.chain().any(|c| {
        c.is::<UsageError>()
            || c.is::<FormatError>()
            || c.is::<MipError>()
            || c.is::<MarkovError>()
            || c.is::<ClusteringError>()
            || c.is::<serde_json::Error>()
            || matches!(
                c.downcast_ref::<SolverError>(),
                Some(
                    SolverError::InvalidClusterCount { .. }
                        | SolverError::InvalidConfig(_)
                        | SolverError::TooLarge { .. }
                        | SolverError::ModelMismatch(_)
                        | SolverError::Mip(_)
                )
            )
            || matches!(
                c.downcast_ref::<GenError>(),
                Some(
                    GenError::TooFewPoints { .. }
                        | GenError::InvalidParameter(_)
                        | GenError::InvalidGraph(_)
                        | GenError::InvalidTerminalCount(_)
                        | GenError::IsolatedNonTerminal(_)
                        | GenError::TerminalEdge(..)
                        | GenError::DimensionMismatch { .. }
                )
            )
    });
    if model_error {
        2
    } else {
        1
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Flow matrix from either file kind; transition matrices go through π.
fn load_flow(path: &Path) -> Result<FlowMatrix> {
    let file = parse_matrix(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    match file {
        MatrixFile::Flow(w) => Ok(w),
        MatrixFile::Transition(p) => {
            let pi = stationary_distribution(&p, STATIONARY_TOL, DEFAULT_STATIONARY_MAX_ITER)
                .with_context(|| format!("stationary distribution of {}", path.display()))?;
            Ok(flow_matrix(&p, &pi)?)
        }
    }
}

fn load_config(global: &Global) -> Result<BnbConfig> {
    let Some(path) = &global.config else { return Ok(BnbConfig::default()) };
    let config: BnbConfig =
        serde_json::from_str(&read(path)?).with_context(|| format!("parsing config {}", path.display()))?;
    Ok(config)
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn to_json(value: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_bytes(columns: &[&str], points: &[Vec<f64>]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_points_csv(&mut buf, columns, points)?;
    Ok(buf)
}

pub fn generate(global: &Global, args: &GenerateArgs) -> Result<ExitCode> {
    let inputs: Vec<&Path> = args.graph.iter().map(|p| p.as_path()).collect();
    let mut run = Run::start(global, "generate", &inputs)?;
    let summary = match args.kind {
        Kind::Omega3 | Kind::Omega4 | Kind::Omega6 => {
            let potential = match args.kind {
                Kind::Omega3 => Potential::Omega3,
                Kind::Omega4 => Potential::Omega4,
                _ => Potential::Omega6,
            };
            let params = HmcParams { beta: args.beta, steps: args.steps, drift: args.drift, ..HmcParams::default() };
            let inst = hmc_instance(potential, &params, args.bins, global.seed)?;
            run.write("matrix.tm", format_transition_matrix(&inst.transition))?;
            let points: Vec<Vec<f64>> = inst.trajectory.points.iter().map(|p| p.to_vec()).collect();
            run.write("trajectory.csv", csv_bytes(&["x", "y"], &points)?)?;
            let centers: Vec<Vec<f64>> = inst.centers.iter().map(|p| p.to_vec()).collect();
            run.write("centers.csv", csv_bytes(&["x", "y"], &centers)?)?;
            format!(
                "{}: {} bins from {} steps, acceptance {:.3}",
                potential.name(),
                inst.transition.n(),
                points.len(),
                inst.trajectory.acceptance_rate()
            )
        }
        Kind::Repressilator => {
            let setup = RepressilatorSetup { starts: args.starts, t_end: args.t_end, dt: args.dt, ..RepressilatorSetup::default() };
            let inst = repressilator_instance(&setup)?;
            run.write("matrix.tm", format_transition_matrix(&inst.transition))?;
            let cols = ["m_a", "p_a", "m_b", "p_b", "m_c", "p_c"];
            let starts: Vec<Vec<f64>> = inst.starts.iter().map(|p| p.to_vec()).collect();
            let ends: Vec<Vec<f64>> = inst.ends.iter().map(|p| p.to_vec()).collect();
            run.write("starts.csv", csv_bytes(&cols, &starts)?)?;
            run.write("ends.csv", csv_bytes(&cols, &ends)?)?;
            format!("repressilator: {} bins", inst.transition.n())
        }
        Kind::Triangle => {
            run.write("matrix.fm", format_flow_matrix(&triangle_fixture()))?;
            "triangle: 9 bins".to_string()
        }
        Kind::MultiwayCut => {
            let mc = match &args.graph {
                Some(path) => parse_multiway_cut(&read(path)?).with_context(|| format!("parsing {}", path.display()))?,
                None => random_multiway_cut(args.vertices, args.terminals, args.edge_prob, global.seed),
            };
            let reduced = multiway_cut_to_instance(&mc, args.alpha)?;
            let w = flow_matrix(&reduced.transition, &reduced.stationary)?;
            run.write("graph.mwc", format_multiway_cut(&mc))?;
            run.write("matrix.fm", format_flow_matrix(&w))?;
            format!("multiway cut: {} vertices, {} edges, M = {}", mc.vertices, mc.edges.len(), reduced.big_m)
        }
    };
    run.finish(args)?;
    println!("{summary}");
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SolveReport {
    format: &'static str,
    status: SolveStatus,
    primal: Option<f64>,
    dual_bound: Option<f64>,
    gap: Option<f64>,
    nodes: usize,
    lp_iterations: usize,
    wall_time: f64,
    n: usize,
    m: usize,
    alpha: f64,
    objective: Option<ObjectiveValue>,
}

impl SolveReport {
    fn new(r: &SolveResult, n: usize, m: usize, alpha: f64) -> Self {
        Self {
            format: "solve-v1",
            status: r.status,
            primal: finite(r.primal),
            dual_bound: finite(r.dual_bound),
            gap: finite(r.gap),
            nodes: r.nodes,
            lp_iterations: r.lp_iterations,
            wall_time: r.wall_time,
            n,
            m,
            alpha,
            objective: r.objective,
        }
    }
}

pub fn solve(global: &Global, args: &SolveArgs) -> Result<ExitCode> {
    let model = &args.model;
    let mut inputs = vec![model.matrix.as_path()];
    inputs.extend(global.config.as_deref());
    let mut run = Run::start(global, "solve", &inputs)?;
    let w = load_flow(&model.matrix)?;
    let mut config = load_config(global)?;
    if let Some(t) = args.time_limit {
        config.time_limit_s = Some(t);
    }
    config.validate()?;
    let mip = build_mip(&w, model.m, model.alpha)?;
    if args.emit_lp {
        run.write("model.lp", export_model(&mip))?;
    }
    let r = branch_and_bound(&mip, &w, &config)?;
    run.write("solve.json", to_json(&SolveReport::new(&r, w.n(), model.m, model.alpha))?)?;
    let found = match (&r.incumbent, r.objective) {
        (Some(c), Some(obj)) => {
            run.write("clustering.json", format_clustering(&ClusteringFile::new(c, model.alpha, obj)))?;
            println!(
                "status {:?}: objective {:.10} (flow {:.10}, coherence {:.10}), bound {:.10}, gap {:.2e}, {} nodes",
                r.status, obj.total, obj.flow_part, obj.coherence_part, r.dual_bound, r.gap, r.nodes
            );
            true
        }
        _ => {
            println!("status {:?}: no clustering found", r.status);
            false
        }
    };
    run.finish(args)?;
    if !found {
        bail!("no feasible clustering found (status {:?})", r.status);
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct VerifyReport {
    format: &'static str,
    stored: ObjectiveValue,
    recomputed: ObjectiveValue,
    delta_total: f64,
    delta_flow: f64,
    delta_coherence: f64,
    delta_matrix: Vec<Vec<f64>>,
    delta_balance_residual: f64,
    epsilon: Option<f64>,
    epsilon_residual: Option<f64>,
    ok: bool,
}

pub fn verify(global: &Global, args: &VerifyArgs) -> Result<ExitCode> {
    let mut run = Run::start(global, "verify", &[&args.matrix, &args.clustering])?;
    let w = load_flow(&args.matrix)?;
    let file = parse_clustering(&read(&args.clustering)?)
        .with_context(|| format!("parsing {}", args.clustering.display()))?;
    let c = file.clustering()?;
    if c.n() != w.n() {
        return Err(usage(format!("clustering has {} bins but the matrix has {}", c.n(), w.n())));
    }
    let stored = file.objective();
    let recomputed = objective(&w, &c, file.alpha)?;
    let p = project(&w, &c)?;
    let eps = p.epsilon_structure();
    let report = VerifyReport {
        format: "verify-v1",
        stored,
        recomputed,
        delta_total: stored.total - recomputed.total,
        delta_flow: stored.flow_part - recomputed.flow_part,
        delta_coherence: stored.coherence_part - recomputed.coherence_part,
        delta_matrix: p.delta(),
        delta_balance_residual: p.delta_balance_residual(),
        epsilon: eps.map(|e| e.0),
        epsilon_residual: eps.map(|e| e.1),
        ok: false,
    };
    let worst = [report.delta_total, report.delta_flow, report.delta_coherence]
        .iter()
        .fold(0.0f64, |a, d| if d.is_nan() { f64::INFINITY } else { a.max(d.abs()) });
    let report = VerifyReport { ok: worst <= VERIFY_TOL, ..report };
    run.write("verify.json", to_json(&report)?)?;
    run.finish(args)?;

    println!("objective  stored {:.12}  recomputed {:.12}  delta {:.3e}", stored.total, recomputed.total, report.delta_total);
    println!("flow       stored {:.12}  recomputed {:.12}  delta {:.3e}", stored.flow_part, recomputed.flow_part, report.delta_flow);
    println!(
        "coherence  stored {:.12}  recomputed {:.12}  delta {:.3e}",
        stored.coherence_part, recomputed.coherence_part, report.delta_coherence
    );
    println!("Delta = W̄ − W̄ᵀ:");
    for row in &report.delta_matrix {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>14.6e}")).collect();
        println!("  {}", cells.join(" "));
    }
    println!("balance residual {:.3e}", report.delta_balance_residual);
    if let Some((e, r)) = eps {
        println!("epsilon {e:.12e} (structure residual {r:.3e})");
    }
    if report.ok {
        println!("verified");
        Ok(ExitCode::SUCCESS)
    } else {
        bail!("stored objective differs from recomputation by {worst:.3e} (tolerance {VERIFY_TOL:e})")
    }
}

#[derive(Serialize)]
struct OracleReport {
    format: &'static str,
    evaluated: usize,
    clustering: ClusteringFile,
}

pub fn oracle(global: &Global, args: &ModelArgs) -> Result<ExitCode> {
    let mut run = Run::start(global, "oracle", &[&args.matrix])?;
    let w = load_flow(&args.matrix)?;
    let r = brute_force(&w, args.m, args.alpha)?;
    let report = OracleReport {
        format: "oracle-v1",
        evaluated: r.evaluated,
        clustering: ClusteringFile::new(&r.clustering, args.alpha, r.objective),
    };
    run.write("oracle.json", to_json(&report)?)?;
    run.finish(args)?;
    println!(
        "optimum {:.12} (flow {:.12}, coherence {:.12}) over {} clusterings; labels {:?}",
        r.objective.total,
        r.objective.flow_part,
        r.objective.coherence_part,
        r.evaluated,
        r.clustering.to_one_based()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn export_lp(global: &Global, args: &ModelArgs) -> Result<ExitCode> {
    let mut run = Run::start(global, "export-lp", &[&args.matrix])?;
    let w = load_flow(&args.matrix)?;
    let mip = build_mip(&w, args.m, args.alpha)?;
    let path = run.write("model.lp", export_model(&mip))?;
    run.finish(args)?;
    println!("{} variables, {} constraints -> {}", mip.variables.len(), mip.constraints.len(), path.display());
    Ok(ExitCode::SUCCESS)
}

