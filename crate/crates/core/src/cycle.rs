//! Cycle clusterings and the weighted net-flow/coherence objective.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::markov::{project, FlowMatrix, MarkovError};

/// Default coherence weight.
pub const DEFAULT_ALPHA: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClusteringError {
    #[error("cluster count must be positive")]
    NoClusters,
    #[error("{n} bins cannot fill {m} clusters")]
    TooFewBins { n: usize, m: usize },
    #[error("bin {bin} has cluster label {label}, expected a label below {m}")]
    LabelOutOfRange { bin: usize, label: usize, m: usize },
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
}

/// Surjective assignment of `n` bins to `m` clusters in the cyclic order
/// `0 → 1 → … → m−1 → 0`. Labels are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CycleClustering {
    m: usize,
    assignment: Vec<usize>,
}

impl CycleClustering {
    pub fn new(m: usize, assignment: Vec<usize>) -> Result<Self, ClusteringError> {
        if m == 0 {
            return Err(ClusteringError::NoClusters);
        }
        if assignment.len() < m {
            return Err(ClusteringError::TooFewBins { n: assignment.len(), m });
        }
        let mut seen = vec![false; m];
        for (bin, &label) in assignment.iter().enumerate() {
            if label >= m {
                return Err(ClusteringError::LabelOutOfRange { bin, label, m });
            }
            seen[label] = true;
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(ClusteringError::EmptyCluster(k));
        }
        Ok(Self { m, assignment })
    }

    /// Builds a clustering from 1-based labels as used in files.
    pub fn from_one_based(m: usize, labels: &[usize]) -> Result<Self, ClusteringError> {
        let mut assignment = Vec::with_capacity(labels.len());
        for (bin, &label) in labels.iter().enumerate() {
            if label == 0 || label > m {
                return Err(ClusteringError::LabelOutOfRange { bin, label, m });
            }
            assignment.push(label - 1);
        }
        Self::new(m, assignment)
    }

    /// Builds a clustering from explicit clusters listed in cyclic order.
    pub fn from_clusters(n: usize, clusters: &[Vec<usize>]) -> Result<Self, ClusteringError> {
        let m = clusters.len();
        let mut assignment = vec![usize::MAX; n];
        for (k, members) in clusters.iter().enumerate() {
            for &i in members {
                if i >= n {
                    return Err(ClusteringError::TooFewBins { n, m: i + 1 });
                }
                assignment[i] = k;
            }
        }
        if let Some(bin) = assignment.iter().position(|&a| a == usize::MAX) {
            return Err(ClusteringError::LabelOutOfRange { bin, label: 0, m });
        }
        Self::new(m, assignment)
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn label(&self, bin: usize) -> usize {
        self.assignment[bin]
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.assignment.iter().map(|&a| a + 1).collect()
    }

    /// Bins of every cluster in cyclic order, each sorted ascending.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.m];
        for (i, &a) in self.assignment.iter().enumerate() {
            out[a].push(i);
        }
        out
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.m];
        for &a in &self.assignment {
            out[a] += 1;
        }
        out
    }

    /// Successor of cluster `k` in the cyclic order.
    pub fn succ(&self, k: usize) -> usize {
        (k + 1) % self.m
    }

    /// Rotates labels so that bin 0 lies in cluster 0.
    pub fn canonicalize(&self) -> Self {
        let shift = self.assignment.first().copied().unwrap_or(0);
        self.rotate(self.m - shift)
    }

    /// Adds `shift` to every label modulo `m`.
    pub fn rotate(&self, shift: usize) -> Self {
        let m = self.m;
        Self { m, assignment: self.assignment.iter().map(|&a| (a + shift) % m).collect() }
    }

    /// Reverses the cyclic order, keeping cluster 0 in place.
    pub fn reflect(&self) -> Self {
        let m = self.m;
        Self { m, assignment: self.assignment.iter().map(|&a| (m - a) % m).collect() }
    }

    /// True when `other` equals `self` up to a cyclic relabeling.
    pub fn same_up_to_rotation(&self, other: &Self) -> bool {
        self.m == other.m && self.canonicalize() == other.canonicalize()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub total: f64,
    #[serde(rename = "flow")]
    pub flow_part: f64,
    #[serde(rename = "coherence")]
    pub coherence_part: f64,
    #[serde(skip)]
    pub alpha: f64,
}

impl ObjectiveValue {
    pub fn new(flow_part: f64, coherence_part: f64, alpha: f64) -> Self {
        Self { total: flow_part + alpha * coherence_part, flow_part, coherence_part, alpha }
    }
}

/// `Σ_k f(C_k, C_{k+1}) + α Σ_k g(C_k)`, evaluated on the projected matrix.
pub fn objective(w: &FlowMatrix, c: &CycleClustering, alpha: f64) -> Result<ObjectiveValue, MarkovError> {
    let proj = project(w, c)?;
    let m = c.m();
    let mut flow = 0.0;
    let mut coh = 0.0;
    for k in 0..m {
        let l = c.succ(k);
        flow += proj.get(k, l) - proj.get(l, k);
        coh += proj.get(k, k);
    }
    Ok(ObjectiveValue::new(flow, coh, alpha))
}
