//! Multiway cut instances and their reduction to cycle clustering.
//!
//! Every edge `{u, v}` becomes two opposite arcs of weight `c/2`, and the
//! terminals are chained `s_1 → s_2 → … → s_m → s_1` by arcs of weight `M`.
//! Row-normalizing the arc weights gives a chain whose only detailed-balance
//! violations lie on the terminal chain, so an optimal clustering puts one
//! terminal per cluster and otherwise maximizes the uncut edge weight.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GenError;
use crate::markov::{StationaryDistribution, TransitionMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Undirected weighted graph with terminals, 0-based vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiwayCutInstance {
    pub vertices: usize,
    pub edges: Vec<Edge>,
    pub terminals: Vec<usize>,
}

impl MultiwayCutInstance {
    pub fn validate(&self) -> Result<(), GenError> {
        let n = self.vertices;
        if self.terminals.len() < 3 {
            return Err(GenError::InvalidTerminalCount(self.terminals.len()));
        }
        let mut is_terminal = vec![false; n];
        for &t in &self.terminals {
            if t >= n || is_terminal[t] {
                return Err(GenError::InvalidGraph(format!("terminal {t} repeated or out of range")));
            }
            is_terminal[t] = true;
        }
        let mut degree = vec![0.0; n];
        for e in &self.edges {
            if e.u >= n || e.v >= n || e.u == e.v {
                return Err(GenError::InvalidGraph(format!("bad edge {}-{}", e.u, e.v)));
            }
            if !(e.weight >= 0.0 && e.weight.is_finite()) {
                return Err(GenError::InvalidGraph(format!("edge {}-{} has weight {}", e.u, e.v, e.weight)));
            }
            if is_terminal[e.u] && is_terminal[e.v] {
                return Err(GenError::TerminalEdge(e.u, e.v));
            }
            degree[e.u] += e.weight;
            degree[e.v] += e.weight;
        }
        if let Some(v) = (0..n).find(|&v| !is_terminal[v] && degree[v] <= 0.0) {
            return Err(GenError::IsolatedNonTerminal(v));
        }
        Ok(())
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Weight of edges whose endpoints carry different labels.
    pub fn cut_weight(&self, labels: &[usize]) -> f64 {
        self.edges.iter().filter(|e| labels[e.u] != labels[e.v]).map(|e| e.weight).sum()
    }

    /// Whether `labels` put every terminal in its own part.
    pub fn separates_terminals(&self, labels: &[usize]) -> bool {
        let mut seen: Vec<usize> = self.terminals.iter().map(|&t| labels[t]).collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len() == self.terminals.len()
    }
}

#[derive(Debug, Clone)]
pub struct ReducedInstance {
    pub transition: TransitionMatrix,
    pub stationary: StationaryDistribution,
    /// Weight of the terminal chain arcs, `α·Σc + 1`.
    pub big_m: f64,
    /// Sum of all arc weights before normalization.
    pub arc_total: f64,
}

/// Arc weight matrix of the reduction, row-major.
pub fn reduction_arc_weights(mc: &MultiwayCutInstance, alpha: f64) -> Result<(Vec<f64>, f64), GenError> {
    mc.validate()?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(GenError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let n = mc.vertices;
    let big_m = alpha * mc.total_weight() + 1.0;
    let mut q = vec![0.0; n * n];
    for e in &mc.edges {
        q[e.u * n + e.v] += e.weight / 2.0;
        q[e.v * n + e.u] += e.weight / 2.0;
    }
    let t = &mc.terminals;
    for i in 0..t.len() {
        q[t[i] * n + t[(i + 1) % t.len()]] += big_m;
    }
    Ok((q, big_m))
}

pub fn multiway_cut_to_instance(mc: &MultiwayCutInstance, alpha: f64) -> Result<ReducedInstance, GenError> {
    let (q, big_m) = reduction_arc_weights(mc, alpha)?;
    let n = mc.vertices;
    let row_sums: Vec<f64> = q.chunks(n).map(|r| r.iter().sum()).collect();
    let arc_total: f64 = row_sums.iter().sum();
    let p: Vec<f64> = q.iter().enumerate().map(|(k, &v)| v / row_sums[k / n]).collect();
    Ok(ReducedInstance {
        transition: TransitionMatrix::from_flat(n, p)?,
        stationary: StationaryDistribution::new(row_sums.iter().map(|s| s / arc_total).collect())?,
        big_m,
        arc_total,
    })
}

/// Random graph with integer weights in `1..=9`. Terminals are drawn at
/// random; terminal pairs are never joined and every non-terminal receives
/// at least one edge.
pub fn random_multiway_cut(vertices: usize, terminals: usize, edge_prob: f64, seed: u64) -> MultiwayCutInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms: Vec<usize> = sample(&mut rng, vertices, terminals.min(vertices)).into_vec();
    terms.sort_unstable();
    let is_terminal = |v: usize| terms.contains(&v);
    let mut edges = Vec::new();
    let mut degree = vec![0usize; vertices];
    for u in 0..vertices {
        for v in u + 1..vertices {
            if is_terminal(u) && is_terminal(v) {
                continue;
            }
            if rng.random::<f64>() < edge_prob {
                edges.push(Edge { u, v, weight: f64::from(rng.random_range(1..=9u32)) });
                degree[u] += 1;
                degree[v] += 1;
            }
        }
    }
    for u in 0..vertices {
        if degree[u] == 0 && !is_terminal(u) {
            let mut v = rng.random_range(0..vertices - 1);
            if v >= u {
                v += 1;
            }
            edges.push(Edge { u: u.min(v), v: u.max(v), weight: f64::from(rng.random_range(1..=9u32)) });
            degree[u] += 1;
            degree[v] += 1;
        }
    }
    MultiwayCutInstance { vertices, edges, terminals: terms }
}
