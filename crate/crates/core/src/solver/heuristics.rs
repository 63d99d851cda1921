//! Primal heuristics: greedy construction, LP rounding and single-bin
//! exchange.

use crate::cycle::CycleClustering;
use crate::markov::FlowMatrix;
use crate::mip::MipInstance;

const IMPROVEMENT_TOL: f64 = 1e-12;

/// Incremental objective bookkeeping for (partial) assignments.
///
/// `out[i·m + k]` holds `Σ_{j∈C_k, j≠i} q_ij` and `inc[i·m + k]` holds
/// `Σ_{j∈C_k, j≠i} q_ji`, so the value of moving a bin is `O(1)` and
/// applying a move costs `O(n)`.
pub(crate) struct MoveTable<'a> {
    w: &'a FlowMatrix,
    m: usize,
    alpha: f64,
    label: Vec<Option<usize>>,
    sizes: Vec<usize>,
    out: Vec<f64>,
    inc: Vec<f64>,
}

impl<'a> MoveTable<'a> {
    pub fn empty(w: &'a FlowMatrix, m: usize, alpha: f64) -> Self {
        let n = w.n();
        Self { w, m, alpha, label: vec![None; n], sizes: vec![0; m], out: vec![0.0; n * m], inc: vec![0.0; n * m] }
    }

    pub fn from_clustering(w: &'a FlowMatrix, c: &CycleClustering, alpha: f64) -> Self {
        let mut t = Self::empty(w, c.m(), alpha);
        for i in 0..c.n() {
            t.place(i, c.label(i));
        }
        t
    }

    /// Objective contribution of bin `i` if it sat in cluster `k`, counting
    /// only its interactions with currently placed bins.
    pub fn gain(&self, i: usize, k: usize) -> f64 {
        let m = self.m;
        let (next, prev) = ((k + 1) % m, (k + m - 1) % m);
        let base = i * m;
        let flow = (self.out[base + next] - self.inc[base + next]) + (self.inc[base + prev] - self.out[base + prev]);
        flow + self.alpha * (self.w.get(i, i) + self.out[base + k] + self.inc[base + k])
    }

    pub fn label(&self, i: usize) -> Option<usize> {
        self.label[i]
    }

    pub fn size(&self, k: usize) -> usize {
        self.sizes[k]
    }

    fn shift(&mut self, i: usize, k: usize, sign: f64) {
        let (n, m) = (self.w.n(), self.m);
        let row = self.w.row(i);
        for j in 0..n {
            if j == i {
                continue;
            }
            self.out[j * m + k] += sign * self.w.get(j, i);
            self.inc[j * m + k] += sign * row[j];
        }
    }

    pub fn place(&mut self, i: usize, k: usize) {
        debug_assert!(self.label[i].is_none());
        self.shift(i, k, 1.0);
        self.label[i] = Some(k);
        self.sizes[k] += 1;
    }

    pub fn remove(&mut self, i: usize) {
        let k = self.label[i].take().expect("bin is placed");
        self.shift(i, k, -1.0);
        self.sizes[k] -= 1;
    }

    pub fn move_to(&mut self, i: usize, k: usize) {
        self.remove(i);
        self.place(i, k);
    }

    /// Objective change when moving a placed bin `i` to cluster `k`.
    pub fn delta(&self, i: usize, k: usize) -> f64 {
        let from = self.label[i].expect("bin is placed");
        self.gain(i, k) - self.gain(i, from)
    }

    pub fn clustering(&self) -> CycleClustering {
        let a = self.label.iter().map(|l| l.expect("all bins placed")).collect();
        CycleClustering::new(self.m, a).expect("table keeps clusters non-empty")
    }

    /// Fills every empty cluster with the bin whose move costs least; bin 0
    /// and bins in singleton clusters stay put.
    fn repair(&mut self) {
        for k in 0..self.m {
            if self.sizes[k] > 0 {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for i in 1..self.w.n() {
                let from = self.label[i].expect("bin is placed");
                if self.sizes[from] < 2 {
                    continue;
                }
                let d = self.delta(i, k);
                if best.is_none_or(|b| d > b.1) {
                    best = Some((i, d));
                }
            }
            let (i, _) = best.expect("m <= n leaves a movable bin");
            self.move_to(i, k);
        }
    }
}

/// Bin 0 goes to cluster 0; the others follow in order of decreasing mass,
/// each to the cluster with the largest gain against the bins placed so far
/// (ties to the smallest index). Empty clusters are then repaired.
pub fn greedy_heuristic(w: &FlowMatrix, m: usize, alpha: f64) -> CycleClustering {
    assert!(m >= 1 && m <= w.n(), "need 1 <= m <= n");
    let mass = w.row_sums();
    let mut order: Vec<usize> = (1..w.n()).collect();
    order.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]).then(a.cmp(&b)));
    let mut t = MoveTable::empty(w, m, alpha);
    t.place(0, 0);
    for i in order {
        let k = (0..m).fold(0, |best, k| if t.gain(i, k) > t.gain(i, best) { k } else { best });
        t.place(i, k);
    }
    t.repair();
    t.clustering()
}

/// Argmax rounding of the relaxed assignment variables followed by the
/// greedy repair. Returns `None` when the result violates the given bounds
/// on assignment variables.
pub fn rounding_heuristic(
    mip: &MipInstance,
    values: &[f64],
    w: &FlowMatrix,
    col_lower: &[f64],
    col_upper: &[f64],
) -> Option<CycleClustering> {
    let (n, m) = (mip.n(), mip.m());
    let mut t = MoveTable::empty(w, m, mip.alpha());
    for i in 0..n {
        let x = |k: usize| values[mip.x_index(i, k)];
        let k = (0..m).fold(0, |best, k| if x(k) > x(best) { k } else { best });
        t.place(i, k);
    }
    t.repair();
    let c = t.clustering();
    let ok = (0..n).all(|i| {
        (0..m).all(|k| {
            let v = if c.label(i) == k { 1.0 } else { 0.0 };
            let j = mip.x_index(i, k);
            v >= col_lower[j] - 1e-9 && v <= col_upper[j] + 1e-9
        })
    });
    ok.then_some(c)
}

/// Steepest-ascent single-bin relocation. Returns the local optimum and the
/// objective after each applied move, starting with the input objective.
pub fn exchange_improvement_traced(w: &FlowMatrix, c: &CycleClustering, alpha: f64) -> (CycleClustering, Vec<f64>) {
    let mut t = MoveTable::from_clustering(w, c, alpha);
    let start = crate::cycle::objective(w, c, alpha).map(|o| o.total).unwrap_or(f64::NAN);
    let mut trace = vec![start];
    let mut value = start;
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..w.n() {
            let from = t.label(i).expect("placed");
            if t.size(from) < 2 {
                continue;
            }
            for k in 0..c.m() {
                if k == from {
                    continue;
                }
                let d = t.delta(i, k);
                if d > IMPROVEMENT_TOL && best.is_none_or(|b| d > b.2) {
                    best = Some((i, k, d));
                }
            }
        }
        let Some((i, k, d)) = best else { break };
        t.move_to(i, k);
        value += d;
        trace.push(value);
    }
    (t.clustering(), trace)
}

pub fn exchange_improvement(w: &FlowMatrix, c: &CycleClustering, alpha: f64) -> CycleClustering {
    exchange_improvement_traced(w, c, alpha).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycle::objective;

    fn sample(n: usize, seed: u64) -> FlowMatrix {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 33) as f64) / (1u64 << 31) as f64
        };
        let raw: Vec<f64> = (0..n * n).map(|_| next()).collect();
        let total: f64 = raw.iter().sum();
        FlowMatrix::from_flat(n, raw.iter().map(|v| v / total).collect()).unwrap()
    }

    #[test]
    fn move_deltas_match_direct_objective() {
        let w = sample(7, 1);
        let c = CycleClustering::new(3, vec![0, 1, 2, 0, 1, 2, 1]).unwrap();
        let t = MoveTable::from_clustering(&w, &c, 0.3);
        let base = objective(&w, &c, 0.3).unwrap().total;
        for i in 0..7 {
            for k in 0..3 {
                let mut a = c.assignment().to_vec();
                a[i] = k;
                if let Ok(d) = CycleClustering::new(3, a) {
                    let direct = objective(&w, &d, 0.3).unwrap().total - base;
                    let fast = if k == c.label(i) { 0.0 } else { t.delta(i, k) };
                    assert!((direct - fast).abs() < 1e-14, "{i} {k}");
                }
            }
        }
    }

    #[test]
    fn greedy_is_feasible_and_exchange_monotone() {
        for seed in 0..10 {
            let w = sample(8, seed);
            let g = greedy_heuristic(&w, 4, 0.001);
            assert_eq!(g.label(0), 0);
            assert!(g.cluster_sizes().iter().all(|&s| s > 0));
            let (e, trace) = exchange_improvement_traced(&w, &g, 0.001);
            assert!(trace.windows(2).all(|p| p[1] > p[0]));
            let direct = objective(&w, &e, 0.001).unwrap().total;
            assert!((direct - trace.last().unwrap()).abs() < 1e-12);
            // local optimum is a fixed point
            assert_eq!(exchange_improvement(&w, &e, 0.001), e);
        }
    }

    #[test]
    fn greedy_with_n_equal_m_is_a_permutation() {
        let w = sample(4, 3);
        let mut sizes = greedy_heuristic(&w, 4, 0.001).cluster_sizes();
        sizes.sort();
        assert_eq!(sizes, vec![1, 1, 1, 1]);
    }
}
