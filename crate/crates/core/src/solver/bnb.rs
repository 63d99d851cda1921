//! LP-based branch-and-bound on the assignment variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::heuristics::{exchange_improvement, greedy_heuristic, rounding_heuristic};
use super::SolverError;
use crate::cycle::{objective, CycleClustering, ObjectiveValue};
use crate::lp::{Basis, BoundOverride, LpOptions, LpProblem, LpStatus};
use crate::markov::{project, FlowMatrix};
use crate::mip::{MipInstance, INTEGRALITY_TOL};

/// Nodes whose bound does not exceed the incumbent by more than this are
/// discarded.
pub const PRUNE_TOL: f64 = 1e-9;
const OPTIMAL_GAP: f64 = 1e-6;
const LINK_FLOW_TOL: f64 = 1e-9;
const TRACE_EVERY: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeuristicConfig {
    pub greedy: bool,
    pub rounding: bool,
    pub exchange: bool,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self { greedy: true, rounding: true, exchange: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeSelection {
    BestBound,
    Dfs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BnbConfig {
    pub gap_tol: f64,
    pub time_limit_s: Option<f64>,
    pub node_limit: Option<usize>,
    pub node_selection: NodeSelection,
    pub heuristics: HeuristicConfig,
}

impl Default for BnbConfig {
    fn default() -> Self {
        Self {
            gap_tol: 1e-6,
            time_limit_s: None,
            node_limit: None,
            node_selection: NodeSelection::BestBound,
            heuristics: HeuristicConfig::default(),
        }
    }
}

impl BnbConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.gap_tol >= 0.0) {
            return Err(SolverError::InvalidConfig(format!("gap_tol must be >= 0, got {}", self.gap_tol)));
        }
        if let Some(t) = self.time_limit_s {
            if !(t >= 0.0) {
                return Err(SolverError::InvalidConfig(format!("time_limit_s must be >= 0, got {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    TimeLimit,
    GapLimit,
    NodeLimit,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub nodes: usize,
    pub time: f64,
    pub primal: Option<f64>,
    pub dual_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub incumbent: Option<CycleClustering>,
    pub objective: Option<ObjectiveValue>,
    /// Incumbent value, `−∞` without incumbent.
    pub primal: f64,
    pub dual_bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub status: SolveStatus,
    pub wall_time: f64,
    pub trace: Vec<TracePoint>,
}

fn relative_gap(primal: f64, dual: f64) -> f64 {
    if !primal.is_finite() {
        return f64::INFINITY;
    }
    ((dual - primal) / primal.abs().max(1e-9)).max(0.0)
}

struct Node {
    id: usize,
    depth: usize,
    bound: f64,
    fixes: Vec<(usize, bool)>,
    basis: Option<Rc<Basis>>,
    values: Option<Vec<f64>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound).then(other.id.cmp(&self.id))
    }
}

enum Pool {
    Best(BinaryHeap<Node>),
    Depth(Vec<Node>),
}

impl Pool {
    fn push(&mut self, n: Node) {
        match self {
            Pool::Best(h) => h.push(n),
            Pool::Depth(s) => s.push(n),
        }
    }

    fn pop(&mut self) -> Option<Node> {
        match self {
            Pool::Best(h) => h.pop(),
            Pool::Depth(s) => s.pop(),
        }
    }

    fn max_bound(&self) -> Option<f64> {
        match self {
            Pool::Best(h) => h.peek().map(|n| n.bound),
            Pool::Depth(s) => s.iter().map(|n| n.bound).reduce(f64::max),
        }
    }
}

enum Stop {
    Exhausted,
    Gap,
    Time,
    Nodes,
}

struct Search<'a> {
    mip: &'a MipInstance,
    w: &'a FlowMatrix,
    config: &'a BnbConfig,
    lp: LpProblem,
    root_lo: Vec<f64>,
    root_up: Vec<f64>,
    start: Instant,
    deadline: Option<Instant>,
    incumbent: Option<(CycleClustering, ObjectiveValue)>,
    primal: f64,
    dual: f64,
    nodes: usize,
    lp_iterations: usize,
    next_id: usize,
    trace: Vec<TracePoint>,
}

enum NodeLp {
    Infeasible,
    Solved { bound: f64, values: Vec<f64>, basis: Rc<Basis> },
    Unsolved,
}

impl<'a> Search<'a> {
    fn timed_out(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn record(&mut self) {
        self.trace.push(TracePoint {
            nodes: self.nodes,
            time: self.start.elapsed().as_secs_f64(),
            primal: self.incumbent.as_ref().map(|_| self.primal),
            dual_bound: self.dual,
        });
    }

    fn compatible(&self, c: &CycleClustering, lo: &[f64], up: &[f64]) -> bool {
        let m = self.mip.m();
        (0..c.n()).all(|i| {
            (0..m).all(|k| {
                let j = self.mip.x_index(i, k);
                let v = if c.label(i) == k { 1.0 } else { 0.0 };
                v >= lo[j] - INTEGRALITY_TOL && v <= up[j] + INTEGRALITY_TOL
            })
        })
    }

    fn links_nonnegative(&self, c: &CycleClustering) -> bool {
        let Ok(p) = project(self.w, c) else { return false };
        let m = c.m();
        (0..m).all(|k| p.get(k, (k + 1) % m) - p.get((k + 1) % m, k) >= -LINK_FLOW_TOL)
    }

    /// Installs the better of `c` and its reflection when it is feasible for
    /// the model and improves the incumbent.
    fn offer(&mut self, c: &CycleClustering) -> bool {
        let mut best: Option<(CycleClustering, ObjectiveValue)> = None;
        for cand in [c.canonicalize(), c.reflect().canonicalize()] {
            if !self.compatible(&cand, &self.root_lo, &self.root_up) || !self.links_nonnegative(&cand) {
                continue;
            }
            let Ok(obj) = objective(self.w, &cand, self.mip.alpha()) else { continue };
            if best.as_ref().is_none_or(|b| obj.total > b.1.total) {
                best = Some((cand, obj));
            }
        }
        match best {
            Some((cand, obj)) if obj.total > self.primal + 1e-12 => {
                log::debug!("bnb: incumbent {:.12} at node {}", obj.total, self.nodes);
                self.primal = obj.total;
                self.incumbent = Some((cand, obj));
                self.record();
                true
            }
            _ => false,
        }
    }

    fn offer_and_improve(&mut self, c: &CycleClustering) {
        let mut current = c.clone();
        while self.offer(&current) && self.config.heuristics.exchange {
            let inc = self.incumbent.as_ref().expect("just installed").0.clone();
            current = exchange_improvement(self.w, &inc, self.mip.alpha());
            if current == inc {
                break;
            }
        }
    }

    fn bounds_for(&self, fixes: &[(usize, bool)]) -> (Vec<f64>, Vec<f64>) {
        let mut lo = self.root_lo.clone();
        let mut up = self.root_up.clone();
        for &(j, one) in fixes {
            let v = if one { 1.0 } else { 0.0 };
            lo[j] = lo[j].max(v);
            up[j] = up[j].min(v);
        }
        (lo, up)
    }

    fn solve_lp(&mut self, lo: &[f64], up: &[f64], warm: Option<&Basis>, id: usize, depth: usize) -> Result<NodeLp, SolverError> {
        let options = LpOptions { deadline: self.deadline, ..LpOptions::default() };
        let r = self
            .lp
            .solve(lo, up, warm, &options)
            .map_err(|source| SolverError::Lp { node: id, depth, source })?;
        self.lp_iterations += r.iterations;
        Ok(match r.status {
            LpStatus::Infeasible => NodeLp::Infeasible,
            LpStatus::Optimal => NodeLp::Solved {
                bound: r.objective,
                values: r.values,
                basis: Rc::new(r.basis.expect("optimal result carries a basis")),
            },
            _ => NodeLp::Unsolved,
        })
    }

    fn make_node(&mut self, fixes: Vec<(usize, bool)>, depth: usize, parent_bound: f64, warm: Option<&Basis>) -> Result<Option<Node>, SolverError> {
        let id = self.next_id;
        self.next_id += 1;
        let (lo, up) = self.bounds_for(&fixes);
        if lo.iter().zip(&up).any(|(l, u)| l > u) {
            return Ok(None);
        }
        let node = match self.solve_lp(&lo, &up, warm, id, depth)? {
            NodeLp::Infeasible => return Ok(None),
            NodeLp::Solved { bound, values, basis } => Node {
                id,
                depth,
                bound: bound.min(parent_bound),
                fixes,
                basis: Some(basis),
                values: Some(values),
            },
            NodeLp::Unsolved => Node { id, depth, bound: parent_bound, fixes, basis: warm.map(|b| Rc::new(b.clone())), values: None },
        };
        Ok(Some(node))
    }

    /// Most fractional free assignment variable, ties to the smallest index.
    fn branching_variable(&self, node: &Node, lo: &[f64], up: &[f64]) -> Option<usize> {
        let nx = self.mip.n() * self.mip.m();
        let free = |j: &usize| lo[*j] < up[*j];
        match &node.values {
            Some(v) => {
                let mut best: Option<(usize, f64)> = None;
                for j in (0..nx).filter(free) {
                    let frac = v[j].min(1.0 - v[j]);
                    if frac > INTEGRALITY_TOL && best.is_none_or(|b| frac > b.1) {
                        best = Some((j, frac));
                    }
                }
                best.map(|b| b.0)
            }
            None => (0..nx).find(free),
        }
    }

    fn clustering_from_x(&self, values: &[f64]) -> Option<CycleClustering> {
        let (n, m) = (self.mip.n(), self.mip.m());
        let assignment: Vec<usize> = (0..n)
            .map(|i| (0..m).fold(0, |b, k| if values[self.mip.x_index(i, k)] > values[self.mip.x_index(i, b)] { k } else { b }))
            .collect();
        CycleClustering::new(m, assignment).ok()
    }

    fn process(&mut self, node: Node, pool: &mut Pool) -> Result<(), SolverError> {
        let (lo, up) = self.bounds_for(&node.fixes);
        let Some(var) = self.branching_variable(&node, &lo, &up) else {
            // integral relaxation or fully fixed assignment
            let values = node.values.clone().unwrap_or_else(|| lo.clone());
            if let Some(c) = self.clustering_from_x(&values) {
                self.offer_and_improve(&c);
            }
            return Ok(());
        };
        if let Some(values) = &node.values {
            if self.config.heuristics.rounding && node.depth % 5 == 0 {
                if let Some(c) = rounding_heuristic(self.mip, values, self.w, &lo, &up) {
                    self.offer_and_improve(&c);
                }
            }
        }
        let warm = node.basis.clone();
        let mut children = Vec::with_capacity(2);
        for one in [false, true] {
            let mut fixes = node.fixes.clone();
            fixes.push((var, one));
            if let Some(child) = self.make_node(fixes, node.depth + 1, node.bound, warm.as_deref())? {
                children.push(child);
            }
        }
        for child in children {
            if child.bound > self.primal + PRUNE_TOL {
                pool.push(child);
            }
        }
        Ok(())
    }

    fn result(self, status: SolveStatus) -> SolveResult {
        let (incumbent, objective) = match self.incumbent {
            Some((c, o)) => (Some(c), Some(o)),
            None => (None, None),
        };
        SolveResult {
            incumbent,
            objective,
            primal: self.primal,
            dual_bound: self.dual,
            gap: relative_gap(self.primal, self.dual),
            nodes: self.nodes,
            lp_iterations: self.lp_iterations,
            status,
            wall_time: self.start.elapsed().as_secs_f64(),
            trace: self.trace,
        }
    }
}

/// Maximizes the cycle clustering objective of `w` encoded by `mip`.
pub fn branch_and_bound(mip: &MipInstance, w: &FlowMatrix, config: &BnbConfig) -> Result<SolveResult, SolverError> {
    branch_and_bound_with(mip, w, config, &[])
}

/// As [`branch_and_bound`] with additional root bound overrides.
pub fn branch_and_bound_with(
    mip: &MipInstance,
    w: &FlowMatrix,
    config: &BnbConfig,
    overrides: &[BoundOverride],
) -> Result<SolveResult, SolverError> {
    config.validate()?;
    if mip.n() != w.n() {
        return Err(SolverError::ModelMismatch(format!("model has {} bins, matrix has {}", mip.n(), w.n())));
    }
    let start = Instant::now();
    let lp = LpProblem::from_mip(mip);
    let (root_lo, root_up) = lp.bounds_with(overrides).map_err(|source| SolverError::Lp { node: 0, depth: 0, source })?;
    let trivial = w.trivial_objective_bound(mip.alpha());
    let mut s = Search {
        mip,
        w,
        config,
        lp,
        root_lo,
        root_up,
        start,
        deadline: config.time_limit_s.map(|t| start + Duration::from_secs_f64(t)),
        incumbent: None,
        primal: f64::NEG_INFINITY,
        dual: trivial,
        nodes: 0,
        lp_iterations: 0,
        next_id: 0,
        trace: Vec::new(),
    };
    if s.root_lo.iter().zip(&s.root_up).any(|(l, u)| l > u) {
        s.dual = f64::NEG_INFINITY;
        s.record();
        return Ok(s.result(SolveStatus::Infeasible));
    }
    if config.heuristics.greedy {
        let g = greedy_heuristic(w, mip.m(), mip.alpha());
        s.offer_and_improve(&g);
    }
    let mut pool = match config.node_selection {
        NodeSelection::BestBound => Pool::Best(BinaryHeap::new()),
        NodeSelection::Dfs => Pool::Depth(Vec::new()),
    };
    if let Some(root) = s.make_node(Vec::new(), 0, trivial, None)? {
        s.dual = root.bound;
        s.record();
        pool.push(root);
    }
    let stop = loop {
        let Some(open) = pool.max_bound() else { break Stop::Exhausted };
        s.dual = s.dual.min(open.max(s.primal));
        if relative_gap(s.primal, s.dual) <= config.gap_tol {
            break Stop::Gap;
        }
        if s.timed_out() {
            break Stop::Time;
        }
        if config.node_limit.is_some_and(|l| s.nodes >= l) {
            break Stop::Nodes;
        }
        let node = pool.pop().expect("pool is non-empty");
        if node.bound <= s.primal + PRUNE_TOL {
            continue;
        }
        s.nodes += 1;
        s.process(node, &mut pool)?;
        if s.nodes % TRACE_EVERY == 0 {
            s.record();
        }
    };
    let status = match stop {
        Stop::Exhausted => {
            if s.incumbent.is_some() {
                s.dual = s.primal;
                SolveStatus::Optimal
            } else {
                s.dual = f64::NEG_INFINITY;
                SolveStatus::Infeasible
            }
        }
        Stop::Gap if relative_gap(s.primal, s.dual) <= OPTIMAL_GAP => SolveStatus::Optimal,
        Stop::Gap => SolveStatus::GapLimit,
        Stop::Time => SolveStatus::TimeLimit,
        Stop::Nodes => SolveStatus::NodeLimit,
    };
    s.record();
    log::info!(
        "bnb: {status:?} primal {:.12} dual {:.12} nodes {} lp iterations {}",
        s.primal,
        s.dual,
        s.nodes,
        s.lp_iterations
    );
    Ok(s.result(status))
}
