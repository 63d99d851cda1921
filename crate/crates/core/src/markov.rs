//! Transition matrices, stationary distributions and the net-flow algebra.
//!
//! All matrices are dense and row-major. Indices are 0-based throughout the
//! library; file formats that expose bins to users convert at the boundary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cycle::CycleClustering;

/// Maximum allowed deviation of a row sum from one.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Default residual tolerance for the power iteration.
pub const DEFAULT_STATIONARY_TOL: f64 = 1e-10;
/// Default iteration budget for the power iteration.
pub const DEFAULT_STATIONARY_MAX_ITER: usize = 100_000;

const NON_UNIQUE_SEED: u64 = 0x005e_edc1_c1e5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarkovError {
    #[error("matrix is empty")]
    Empty,
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("negative entry at ({0}, {1})")]
    NegativeEntry(usize, usize),
    #[error("row {0} sums to {1}, expected 1")]
    RowSumViolation(usize, f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("stationary distribution did not converge within {0} iterations")]
    NotConverged(usize),
    #[error("stationary distribution is not unique (starts differ by {0:e})")]
    NonUnique(f64),
    #[error("sets are not disjoint: bin {0} is in both")]
    OverlappingSets(usize),
    #[error("bin {index} out of range for {n} bins")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("invalid tolerance {0}")]
    InvalidTolerance(f64),
}

pub type Result<T> = std::result::Result<T, MarkovError>;

fn flatten(rows: &[Vec<f64>]) -> Result<(usize, Vec<f64>)> {
    let n = rows.len();
    if n == 0 {
        return Err(MarkovError::Empty);
    }
    let mut data = Vec::with_capacity(n * n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(MarkovError::NotSquare { row: i, len: row.len(), expected: n });
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(MarkovError::NonFinite(i, j));
            }
        }
        data.extend_from_slice(row);
    }
    Ok((n, data))
}

/// Row-stochastic matrix of conditional transition probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    /// Validates a raw square matrix. Nothing is renormalized: a row that is
    /// off by more than [`ROW_SUM_TOL`] is an error.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let (n, data) = flatten(rows)?;
        Self::from_flat(n, data)
    }

    pub fn from_flat(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(MarkovError::Empty);
        }
        if data.len() != n * n {
            return Err(MarkovError::DimensionMismatch { expected: n * n, got: data.len() });
        }
        for i in 0..n {
            let row = &data[i * n..(i + 1) * n];
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(MarkovError::NonFinite(i, j));
                }
                if v < 0.0 {
                    return Err(MarkovError::NegativeEntry(i, j));
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(MarkovError::RowSumViolation(i, sum));
            }
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    /// `out = vᵀ P`.
    fn left_mul(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.row(i)) {
                *o += vi * p;
            }
        }
    }

    /// `‖vᵀP − vᵀ‖∞`.
    pub fn stationarity_residual(&self, v: &[f64]) -> f64 {
        let mut out = vec![0.0; self.n];
        self.left_mul(v, &mut out);
        out.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Stationary distribution π of a transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pi: Vec<f64>,
}

impl StationaryDistribution {
    /// Wraps a probability vector; entries must be non-negative and sum to one.
    pub fn new(pi: Vec<f64>) -> Result<Self> {
        if pi.is_empty() {
            return Err(MarkovError::Empty);
        }
        for (i, &p) in pi.iter().enumerate() {
            if !p.is_finite() {
                return Err(MarkovError::NonFinite(i, 0));
            }
            if p < 0.0 {
                return Err(MarkovError::NegativeEntry(i, 0));
            }
        }
        let sum: f64 = pi.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(MarkovError::RowSumViolation(0, sum));
        }
        Ok(Self { pi })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.pi
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }
}

enum PowerOutcome {
    Converged(Vec<f64>),
    Exhausted,
}

/// Power iteration on the left action. The convergence test is applied to the
/// average of the last two iterates, which also settles period-2 chains.
fn power_iteration(p: &TransitionMatrix, start: Vec<f64>, tol: f64, max_iter: usize) -> PowerOutcome {
    let n = p.n();
    let mut cur = start;
    let mut next = vec![0.0; n];
    let mut avg = vec![0.0; n];
    if p.stationarity_residual(&cur) <= tol {
        return PowerOutcome::Converged(cur);
    }
    for _ in 0..max_iter {
        p.left_mul(&cur, &mut next);
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= s);
        for ((a, c), x) in avg.iter_mut().zip(&cur).zip(&next) {
            *a = 0.5 * (c + x);
        }
        if p.stationarity_residual(&avg) <= tol {
            let s: f64 = avg.iter().sum();
            avg.iter_mut().for_each(|x| *x /= s);
            return PowerOutcome::Converged(avg);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    PowerOutcome::Exhausted
}

/// Computes π with `‖πᵀP − πᵀ‖∞ ≤ tol`.
///
/// The iteration starts from the uniform vector. A second run from a seeded
/// random vector guards against reducible chains: if both runs converge to
/// vectors more than `100·tol` apart the chain has several stationary
/// distributions and [`MarkovError::NonUnique`] is returned. If only the
/// uniform run converges the check is inconclusive and its result is kept.
pub fn stationary_distribution(
    p: &TransitionMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<StationaryDistribution> {
    if !(tol > 0.0) {
        return Err(MarkovError::InvalidTolerance(tol));
    }
    let n = p.n();
    let uniform = vec![1.0 / n as f64; n];
    let first = match power_iteration(p, uniform, tol, max_iter) {
        PowerOutcome::Converged(v) => v,
        PowerOutcome::Exhausted => return Err(MarkovError::NotConverged(max_iter)),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(NON_UNIQUE_SEED);
    let mut start: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.01).collect();
    let s: f64 = start.iter().sum();
    start.iter_mut().for_each(|x| *x /= s);
    if let PowerOutcome::Converged(second) = power_iteration(p, start, tol, max_iter) {
        let diff = first.iter().zip(&second).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if diff > 100.0 * tol {
            return Err(MarkovError::NonUnique(diff));
        }
    }
    Ok(StationaryDistribution { pi: first })
}

/// Matrix of unconditional transition probabilities `q_ij = π_i p_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix {
    n: usize,
    data: Vec<f64>,
}

impl FlowMatrix {
    /// Accepts any non-negative finite square matrix. The cycle-clustering
    /// model does not need `W` to come from a stochastic matrix.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let (n, data) = flatten(rows)?;
        Self::from_flat(n, data)
    }

    pub fn from_flat(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(MarkovError::Empty);
        }
        if data.len() != n * n {
            return Err(MarkovError::DimensionMismatch { expected: n * n, got: data.len() });
        }
        for (idx, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(MarkovError::NonFinite(idx / n, idx % n));
            }
            if v < 0.0 {
                return Err(MarkovError::NegativeEntry(idx / n, idx % n));
            }
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            for (o, &v) in out.iter_mut().zip(self.row(i)) {
                *o += v;
            }
        }
        out
    }

    /// Row sums of `W`, i.e. the stationary mass of each bin when `W = diag(π)P`.
    pub fn bin_mass(&self) -> Vec<f64> {
        self.row_sums()
    }

    /// `Σ_{i<j} |q_ij − q_ji| + α Σ_ij q_ij`, an upper bound on the objective
    /// of every clustering.
    pub fn trivial_objective_bound(&self, alpha: f64) -> f64 {
        let mut flow = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                flow += (self.get(i, j) - self.get(j, i)).abs();
            }
        }
        flow + alpha * self.total()
    }

    fn check_set(&self, set: &[usize]) -> Result<()> {
        match set.iter().find(|&&i| i >= self.n) {
            Some(&index) => Err(MarkovError::IndexOutOfRange { index, n: self.n }),
            None => Ok(()),
        }
    }
}

/// `q_ij = π_i p_ij`.
pub fn flow_matrix(p: &TransitionMatrix, pi: &StationaryDistribution) -> Result<FlowMatrix> {
    let n = p.n();
    if pi.len() != n {
        return Err(MarkovError::DimensionMismatch { expected: n, got: pi.len() });
    }
    let mut data = Vec::with_capacity(n * n);
    for (i, &w) in pi.as_slice().iter().enumerate() {
        data.extend(p.row(i).iter().map(|&x| w * x));
    }
    Ok(FlowMatrix { n, data })
}

/// Net flow `f(A, B) = Σ_{i∈A, j∈B} (q_ij − q_ji)`.
pub fn net_flow(w: &FlowMatrix, a: &[usize], b: &[usize]) -> Result<f64> {
    w.check_set(a)?;
    w.check_set(b)?;
    let mut in_a = vec![false; w.n()];
    for &i in a {
        in_a[i] = true;
    }
    if let Some(&dup) = b.iter().find(|&&j| in_a[j]) {
        return Err(MarkovError::OverlappingSets(dup));
    }
    let mut sum = 0.0;
    for &i in a {
        for &j in b {
            sum += w.get(i, j) - w.get(j, i);
        }
    }
    Ok(sum)
}

/// Coherence `g(A) = Σ_{i,j∈A} q_ij`.
pub fn coherence(w: &FlowMatrix, a: &[usize]) -> Result<f64> {
    w.check_set(a)?;
    let mut sum = 0.0;
    for &i in a {
        for &j in a {
            sum += w.get(i, j);
        }
    }
    Ok(sum)
}

/// Aggregated matrix `W̄ = XᵀWX` over the clusters of a clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedMatrix {
    m: usize,
    data: Vec<f64>,
}

impl ProjectedMatrix {
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.data[k * self.m + l]
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.m).map(|r| r.to_vec()).collect()
    }

    /// `Δ = W̄ − W̄ᵀ`, row-major.
    pub fn delta(&self) -> Vec<Vec<f64>> {
        (0..self.m)
            .map(|k| (0..self.m).map(|l| self.get(k, l) - self.get(l, k)).collect())
            .collect()
    }

    /// Largest absolute diagonal entry, row sum or column sum of `Δ`.
    pub fn delta_balance_residual(&self) -> f64 {
        let d = self.delta();
        let mut worst: f64 = 0.0;
        for k in 0..self.m {
            worst = worst.max(d[k][k].abs());
            worst = worst.max(d[k].iter().sum::<f64>().abs());
            worst = worst.max((0..self.m).map(|r| d[r][k]).sum::<f64>().abs());
        }
        worst
    }

    /// For three clusters, `Δ = ε·[[0,1,−1],[−1,0,1],[1,−1,0]]`. Returns ε
    /// (the mean of the three forward entries) and the largest deviation of
    /// `Δ` from that form. `None` unless `m = 3`.
    pub fn epsilon_structure(&self) -> Option<(f64, f64)> {
        if self.m != 3 {
            return None;
        }
        let d = self.delta();
        let forward = [d[0][1], d[1][2], d[2][0]];
        let eps = forward.iter().sum::<f64>() / 3.0;
        let pattern = [[0.0, 1.0, -1.0], [-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]];
        let mut resid: f64 = 0.0;
        for k in 0..3 {
            for l in 0..3 {
                resid = resid.max((d[k][l] - eps * pattern[k][l]).abs());
            }
        }
        Some((eps, resid))
    }
}

/// `W̄_kl = Σ_{i∈C_k, j∈C_l} q_ij`.
pub fn project(w: &FlowMatrix, clustering: &CycleClustering) -> Result<ProjectedMatrix> {
    let n = w.n();
    if clustering.n() != n {
        return Err(MarkovError::DimensionMismatch { expected: n, got: clustering.n() });
    }
    let m = clustering.m();
    let a = clustering.assignment();
    let mut data = vec![0.0; m * m];
    for i in 0..n {
        let base = a[i] * m;
        for (j, &q) in w.row(i).iter().enumerate() {
            data[base + a[j]] += q;
        }
    }
    Ok(ProjectedMatrix { m, data })
}
