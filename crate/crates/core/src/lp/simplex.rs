//! Bounded-variable revised simplex.
//!
//! The problem is kept in computational form `A x − s = 0` with bounds on
//! both the structural variables `x` and the row activities `s`, and is
//! minimized. The dual simplex (steepest-edge pricing, bound-flipping ratio
//! test with Harris tolerances) does the bulk of the work; a primal simplex
//! cleans up when the dual phase ends with residual dual infeasibilities.

use std::time::Instant;

use super::lu::BasisFactor;
use super::sparse::SparseMatrix;
use super::{Basis, LpError, LpStatus, VarStatus};

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const BIG_BOX: f64 = 1e6;
const COND_LIMIT: f64 = 1e12;
const DSE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    Zero,
}

pub(super) struct Settings {
    pub iteration_limit: usize,
    pub deadline: Option<Instant>,
    pub bland_after: usize,
    pub refactor_interval: usize,
}

pub(super) struct Outcome {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub d: Vec<f64>,
    pub iterations: usize,
    pub basis: Basis,
}

pub(super) struct Simplex<'a> {
    a: &'a SparseMatrix,
    nrows: usize,
    ncols: usize,
    cost: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    artificial: Vec<bool>,
    x: Vec<f64>,
    d: Vec<f64>,
    state: Vec<State>,
    head: Vec<usize>,
    factor: BasisFactor,
    dse: Vec<f64>,
    iterations: usize,
    settings: Settings,
    degenerate_run: usize,
    bland: bool,
    // scratch, sized by rows (`r*`) or by variables (`v*`)
    r_a: Vec<f64>,
    r_b: Vec<f64>,
    r_c: Vec<f64>,
    r_d: Vec<f64>,
    v_alpha: Vec<f64>,
    v_touched: Vec<usize>,
    v_mark: Vec<bool>,
}

fn is_boxed(lo: f64, up: f64) -> bool {
    lo.is_finite() && up.is_finite()
}

impl<'a> Simplex<'a> {
    /// `cost` is the minimization cost of the structural columns; `lo`/`up`
    /// hold bounds of structurals followed by row bounds.
    pub fn new(
        a: &'a SparseMatrix,
        cost: &[f64],
        lo: Vec<f64>,
        up: Vec<f64>,
        warm: Option<&Basis>,
        settings: Settings,
    ) -> Result<Self, LpError> {
        let (nrows, ncols) = (a.nrows(), a.ncols());
        let nt = nrows + ncols;
        let mut full_cost = cost.to_vec();
        full_cost.resize(nt, 0.0);
        let mut s = Simplex {
            a,
            nrows,
            ncols,
            cost: full_cost,
            lo,
            up,
            artificial: vec![false; nt],
            x: vec![0.0; nt],
            d: vec![0.0; nt],
            state: vec![State::Lower; nt],
            head: Vec::new(),
            factor: BasisFactor::factorize(0, |_, _| {}).0,
            dse: vec![1.0; nrows],
            iterations: 0,
            settings,
            degenerate_run: 0,
            bland: false,
            r_a: vec![0.0; nrows],
            r_b: vec![0.0; nrows],
            r_c: vec![0.0; nrows],
            r_d: vec![0.0; nrows],
            v_alpha: vec![0.0; nt],
            v_touched: Vec::new(),
            v_mark: vec![false; nt],
        };
        let warm_ok = warm.is_some_and(|b| {
            b.status.len() == nt && b.status.iter().filter(|&&v| v == VarStatus::Basic).count() == nrows
        });
        if warm_ok {
            let b = warm.unwrap();
            for (j, st) in b.status.iter().enumerate() {
                s.state[j] = match st {
                    VarStatus::Basic => State::Basic,
                    VarStatus::AtLower => State::Lower,
                    VarStatus::AtUpper => State::Upper,
                    VarStatus::Free => State::Zero,
                };
                if s.state[j] == State::Basic {
                    s.head.push(j);
                }
            }
        } else {
            s.head = (ncols..nt).collect();
            for j in ncols..nt {
                s.state[j] = State::Basic;
            }
            s.crash();
        }
        for j in 0..nt {
            if s.state[j] != State::Basic {
                s.state[j] = s.feasible_state(j, s.state[j]);
            }
        }
        s.refactor()?;
        s.make_dual_feasible();
        s.compute_primal();
        Ok(s)
    }

    fn feasible_state(&self, j: usize, want: State) -> State {
        let (l, u) = (self.lo[j], self.up[j]);
        match want {
            State::Lower if l.is_finite() => State::Lower,
            State::Upper if u.is_finite() => State::Upper,
            _ if l.is_finite() => State::Lower,
            _ if u.is_finite() => State::Upper,
            _ => State::Zero,
        }
    }

    /// Makes structurals basic in equality rows when they could not
    /// otherwise be placed at a dual feasible bound.
    fn crash(&mut self) {
        let mut used = vec![false; self.nrows];
        for j in 0..self.ncols {
            let c = self.cost[j];
            let needs = (c < 0.0 && self.up[j] == f64::INFINITY)
                || (c > 0.0 && self.lo[j] == f64::NEG_INFINITY);
            if !needs {
                continue;
            }
            let (idx, val) = self.a.col(j);
            if idx.iter().any(|&r| used[r]) {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for (&r, &v) in idx.iter().zip(val) {
                let li = self.ncols + r;
                if self.lo[li] == self.up[li] && best.is_none_or(|b| v.abs() > b.1) {
                    best = Some((r, v.abs()));
                }
            }
            if let Some((r, _)) = best {
                used[r] = true;
                let li = self.ncols + r;
                self.head[r] = j;
                self.state[j] = State::Basic;
                self.state[li] = State::Lower;
            }
        }
    }

    #[inline]
    fn load_column(&self, j: usize, dense: &mut [f64]) {
        if j < self.ncols {
            let (idx, val) = self.a.col(j);
            for (&i, &v) in idx.iter().zip(val) {
                dense[i] = v;
            }
        } else {
            dense[j - self.ncols] = -1.0;
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            State::Lower => self.lo[j],
            State::Upper => self.up[j],
            State::Zero => 0.0,
            State::Basic => self.x[j],
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let (a, ncols) = (self.a, self.ncols);
        let head = &self.head;
        let (factor, replacements) = BasisFactor::factorize(self.nrows, |p, out| {
            let j = head[p];
            if j < ncols {
                let (idx, val) = a.col(j);
                out.extend(idx.iter().copied().zip(val.iter().copied()));
            } else {
                out.push((j - ncols, -1.0));
            }
        });
        for rep in replacements {
            let old = self.head[rep.pos];
            let logical = self.ncols + rep.row;
            self.state[old] = self.feasible_state(old, State::Lower);
            self.head[rep.pos] = logical;
            self.state[logical] = State::Basic;
            self.dse[rep.pos] = 1.0;
        }
        let cond = factor.condition_estimate();
        if !(cond <= COND_LIMIT) {
            return Err(LpError::NumericalFailure { condition: cond });
        }
        self.factor = factor;
        for j in 0..self.x.len() {
            if self.state[j] != State::Basic {
                self.x[j] = self.nonbasic_value(j);
            }
        }
        self.compute_primal();
        self.compute_duals();
        Ok(())
    }

    fn compute_primal(&mut self) {
        let rhs = &mut self.r_a;
        rhs.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.ncols {
            if self.state[j] == State::Basic {
                continue;
            }
            let xj = self.x[j];
            if xj != 0.0 {
                let (idx, val) = self.a.col(j);
                for (&i, &v) in idx.iter().zip(val) {
                    rhs[i] -= v * xj;
                }
            }
        }
        for i in 0..self.nrows {
            let j = self.ncols + i;
            if self.state[j] != State::Basic {
                rhs[i] += self.x[j];
            }
        }
        let mut z = std::mem::take(&mut self.r_b);
        self.factor.ftran(&mut self.r_a, &mut z);
        for (p, &j) in self.head.iter().enumerate() {
            self.x[j] = z[p];
        }
        self.r_b = z;
    }

    fn compute_duals(&mut self) {
        let mut c = std::mem::take(&mut self.r_a);
        for (p, &j) in self.head.iter().enumerate() {
            c[p] = self.cost[j];
        }
        let mut y = std::mem::take(&mut self.r_c);
        self.factor.btran(&mut c, &mut y);
        for j in 0..self.ncols {
            self.d[j] = if self.state[j] == State::Basic { 0.0 } else { self.cost[j] - self.a.col_dot(j, &y) };
        }
        for i in 0..self.nrows {
            let j = self.ncols + i;
            self.d[j] = if self.state[j] == State::Basic { 0.0 } else { y[i] };
        }
        self.r_a = c;
        self.r_c = y;
    }

    fn dual_infeasibility(&self, j: usize) -> f64 {
        let d = self.d[j];
        match self.state[j] {
            State::Basic => 0.0,
            _ if self.lo[j] == self.up[j] => 0.0,
            State::Lower => (-d).max(0.0),
            State::Upper => d.max(0.0),
            State::Zero => d.abs(),
        }
    }

    /// Flips boxed nonbasics to their dual feasible bound and boxes the rest
    /// artificially. Returns whether any value changed.
    fn make_dual_feasible(&mut self) -> bool {
        let mut changed = false;
        for j in 0..self.x.len() {
            if self.dual_infeasibility(j) <= DUAL_TOL {
                continue;
            }
            let want_upper = self.d[j] < 0.0;
            if want_upper && self.up[j] == f64::INFINITY {
                self.up[j] = self.lo[j].max(0.0) + BIG_BOX;
                self.artificial[j] = true;
            } else if !want_upper && self.lo[j] == f64::NEG_INFINITY {
                self.lo[j] = self.up[j].min(0.0) - BIG_BOX;
                self.artificial[j] = true;
            }
            self.state[j] = if want_upper { State::Upper } else { State::Lower };
            self.x[j] = self.nonbasic_value(j);
            changed = true;
        }
        changed
    }

    fn primal_infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lo[j] - PRIMAL_TOL {
            self.lo[j] - v
        } else if v > self.up[j] + PRIMAL_TOL {
            v - self.up[j]
        } else {
            0.0
        }
    }

    fn out_of_time(&self) -> bool {
        self.iterations % 16 == 0 && self.settings.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// `alpha_j = ρᵀ a_j` for every nonbasic `j` touched by `ρ`.
    fn price_row(&mut self, rho: &[f64]) {
        for &j in &self.v_touched {
            self.v_alpha[j] = 0.0;
            self.v_mark[j] = false;
        }
        self.v_touched.clear();
        for (i, &r) in rho.iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            let (idx, val) = self.a.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                if self.state[j] == State::Basic {
                    continue;
                }
                if !self.v_mark[j] {
                    self.v_mark[j] = true;
                    self.v_touched.push(j);
                }
                self.v_alpha[j] += r * v;
            }
            let lj = self.ncols + i;
            if self.state[lj] != State::Basic {
                self.v_mark[lj] = true;
                self.v_touched.push(lj);
                self.v_alpha[lj] = -r;
            }
        }
    }

    fn track_degeneracy(&mut self, step: f64) {
        if step.abs() <= 1e-12 {
            self.degenerate_run += 1;
            if self.degenerate_run >= self.settings.bland_after {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
        }
    }

    fn replace_column(&mut self, r: usize, q: usize, leaving_state: State, col: &[f64]) {
        let p = self.head[r];
        self.state[p] = leaving_state;
        self.x[p] = self.nonbasic_value(p);
        self.head[r] = q;
        self.state[q] = State::Basic;
        self.d[q] = 0.0;
        self.factor.update(r, col);
    }

    fn maybe_refactor(&mut self) -> Result<bool, LpError> {
        let f = &self.factor;
        if f.num_updates() >= self.settings.refactor_interval || f.eta_nnz() > 4 * f.lu_nnz() + 10 * self.nrows {
            self.refactor()?;
            return Ok(true);
        }
        Ok(false)
    }

    /// Runs to completion and reports the final state.
    pub fn run(mut self) -> Result<Outcome, LpError> {
        let mut status = self.dual_phase()?;
        if status == LpStatus::Optimal {
            if self.artificial.iter().enumerate().any(|(j, &art)| {
                art && ((self.state[j] == State::Upper && self.up[j].is_finite())
                    || (self.state[j] == State::Lower && self.lo[j].is_finite()))
                    && (self.x[j].abs() >= BIG_BOX - 1.0)
            }) {
                status = LpStatus::Unbounded;
            } else {
                self.restore_bounds();
                status = self.primal_phase()?;
            }
        }
        Ok(self.finish(status))
    }

    fn restore_bounds(&mut self) {
        for j in 0..self.x.len() {
            if !self.artificial[j] {
                continue;
            }
            self.artificial[j] = false;
            if self.lo[j].abs() >= BIG_BOX - 1.0 && self.state[j] != State::Lower {
                self.lo[j] = f64::NEG_INFINITY;
            }
            if self.up[j].abs() >= BIG_BOX - 1.0 && self.state[j] != State::Upper {
                self.up[j] = f64::INFINITY;
            }
        }
    }

    fn limits_hit(&self) -> Option<LpStatus> {
        if self.iterations >= self.settings.iteration_limit {
            Some(LpStatus::IterationLimit)
        } else if self.out_of_time() {
            Some(LpStatus::TimeLimit)
        } else {
            None
        }
    }

    fn dual_phase(&mut self) -> Result<LpStatus, LpError> {
        let m = self.nrows;
        let mut fresh = true;
        let mut rho = vec![0.0; m];
        let mut col = vec![0.0; m];
        let mut tau = vec![0.0; m];
        let mut flip_delta = vec![0.0; m];
        let mut cands: Vec<(usize, f64, f64)> = Vec::new();
        loop {
            if let Some(st) = self.limits_hit() {
                return Ok(st);
            }
            if self.maybe_refactor()? {
                fresh = true;
                if self.make_dual_feasible() {
                    self.compute_primal();
                }
            }
            // Pricing.
            let mut r = usize::MAX;
            let mut best = 0.0;
            for p in 0..m {
                let j = self.head[p];
                let inf = self.primal_infeasibility(j);
                if inf <= 0.0 {
                    continue;
                }
                if self.bland {
                    if r == usize::MAX || j < self.head[r] {
                        r = p;
                    }
                } else {
                    let score = inf * inf / self.dse[p];
                    if score > best {
                        best = score;
                        r = p;
                    }
                }
            }
            if r == usize::MAX {
                if !fresh {
                    self.refactor()?;
                    fresh = true;
                    continue;
                }
                if self.make_dual_feasible() {
                    self.compute_primal();
                    continue;
                }
                return Ok(LpStatus::Optimal);
            }
            let p_var = self.head[r];
            let to_lower = self.x[p_var] < self.lo[p_var];
            let delta = if to_lower { self.lo[p_var] - self.x[p_var] } else { self.x[p_var] - self.up[p_var] };

            rho.iter_mut().for_each(|v| *v = 0.0);
            let mut unit = std::mem::take(&mut self.r_d);
            unit.iter_mut().for_each(|v| *v = 0.0);
            unit[r] = 1.0;
            self.factor.btran(&mut unit, &mut rho);
            self.r_d = unit;
            self.price_row(&rho);

            // Ratio test with bound flipping and Harris tolerances.
            cands.clear();
            for &j in &self.v_touched {
                if self.lo[j] == self.up[j] {
                    continue;
                }
                let at = if to_lower { self.v_alpha[j] } else { -self.v_alpha[j] };
                let (ok, slack) = match self.state[j] {
                    State::Lower => (at < -PIVOT_TOL, self.d[j]),
                    State::Upper => (at > PIVOT_TOL, -self.d[j]),
                    State::Zero => (at.abs() > PIVOT_TOL, 0.0),
                    State::Basic => (false, 0.0),
                };
                if ok {
                    cands.push((j, slack.max(0.0) / at.abs(), at.abs()));
                }
            }
            if cands.is_empty() {
                if !fresh {
                    self.refactor()?;
                    fresh = true;
                    continue;
                }
                return Ok(LpStatus::Infeasible);
            }
            cands.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            let mut slope = delta;
            let mut start = 0;
            let mut q = usize::MAX;
            let mut step = 0.0;
            while start < cands.len() {
                if self.bland {
                    let t0 = cands[start].1;
                    let (j, t, _) = *cands[start..]
                        .iter()
                        .filter(|c| c.1 <= t0 + 1e-12)
                        .min_by_key(|c| c.0)
                        .unwrap();
                    q = j;
                    step = t;
                    break;
                }
                let mut tmax = f64::INFINITY;
                for &(j, _, at) in &cands[start..] {
                    let slack = match self.state[j] {
                        State::Lower => self.d[j],
                        State::Upper => -self.d[j],
                        _ => 0.0,
                    };
                    tmax = tmax.min((slack.max(0.0) + DUAL_TOL) / at);
                }
                let end = start + cands[start..].iter().take_while(|c| c.1 <= tmax).count();
                let end = end.max(start + 1);
                let group = &cands[start..end];
                let all_boxed = group.iter().all(|c| is_boxed(self.lo[c.0], self.up[c.0]));
                let drop: f64 = group.iter().map(|c| c.2 * (self.up[c.0] - self.lo[c.0])).sum();
                if all_boxed && slope - drop > PRIMAL_TOL && end < cands.len() {
                    slope -= drop;
                    start = end;
                    continue;
                }
                let pick = group
                    .iter()
                    .max_by(|a, b| a.2.total_cmp(&b.2).then(b.0.cmp(&a.0)))
                    .unwrap();
                q = pick.0;
                step = pick.1;
                break;
            }
            if q == usize::MAX {
                if !fresh {
                    self.refactor()?;
                    fresh = true;
                    continue;
                }
                return Ok(LpStatus::Infeasible);
            }
            let flipped: Vec<usize> = cands[..start].iter().map(|c| c.0).collect();

            // Entering column.
            col.iter_mut().for_each(|v| *v = 0.0);
            let mut dense = std::mem::take(&mut self.r_a);
            dense.iter_mut().for_each(|v| *v = 0.0);
            self.load_column(q, &mut dense);
            self.factor.ftran(&mut dense, &mut col);
            self.r_a = dense;
            let piv = col[r];
            let row_piv = self.v_alpha[q];
            if piv.abs() < PIVOT_TOL || (piv - row_piv).abs() > 1e-7 * (1.0 + piv.abs()) {
                if !fresh {
                    self.refactor()?;
                    fresh = true;
                    continue;
                }
                if piv.abs() < PIVOT_TOL {
                    return Err(LpError::NumericalFailure { condition: self.factor.condition_estimate() });
                }
            }

            // Bound flips.
            if !flipped.is_empty() {
                let mut dense = std::mem::take(&mut self.r_a);
                dense.iter_mut().for_each(|v| *v = 0.0);
                for &j in &flipped {
                    let (new_state, dx) = match self.state[j] {
                        State::Lower => (State::Upper, self.up[j] - self.lo[j]),
                        _ => (State::Lower, self.lo[j] - self.up[j]),
                    };
                    self.state[j] = new_state;
                    self.x[j] = self.nonbasic_value(j);
                    if j < self.ncols {
                        let (idx, val) = self.a.col(j);
                        for (&i, &v) in idx.iter().zip(val) {
                            dense[i] += v * dx;
                        }
                    } else {
                        dense[j - self.ncols] -= dx;
                    }
                }
                flip_delta.iter_mut().for_each(|v| *v = 0.0);
                self.factor.ftran(&mut dense, &mut flip_delta);
                self.r_a = dense;
                for (p, &j) in self.head.iter().enumerate() {
                    self.x[j] -= flip_delta[p];
                }
            }

            // Primal step.
            let target = if to_lower { self.lo[p_var] } else { self.up[p_var] };
            let theta = (self.x[p_var] - target) / piv;
            for (p, &j) in self.head.iter().enumerate() {
                if col[p] != 0.0 {
                    self.x[j] -= theta * col[p];
                }
            }
            self.x[q] += theta;

            // Dual step.
            let t = step.max(0.0);
            self.track_degeneracy(t);
            for &j in &self.v_touched {
                let at = if to_lower { self.v_alpha[j] } else { -self.v_alpha[j] };
                self.d[j] += t * at;
            }
            self.d[p_var] = if to_lower { t } else { -t };

            // Steepest-edge weights.
            if !self.bland {
                let w_r: f64 = rho.iter().map(|v| v * v).sum();
                let mut rho_copy = std::mem::take(&mut self.r_b);
                rho_copy.copy_from_slice(&rho);
                tau.iter_mut().for_each(|v| *v = 0.0);
                self.factor.ftran(&mut rho_copy, &mut tau);
                self.r_b = rho_copy;
                for p in 0..m {
                    if p == r || col[p] == 0.0 {
                        continue;
                    }
                    let ratio = col[p] / piv;
                    self.dse[p] = (self.dse[p] - 2.0 * ratio * tau[p] + ratio * ratio * w_r).max(DSE_FLOOR);
                }
                self.dse[r] = (w_r / (piv * piv)).max(DSE_FLOOR);
            }

            let leaving = if to_lower { State::Lower } else { State::Upper };
            self.replace_column(r, q, leaving, &col);
            self.iterations += 1;
            fresh = false;
        }
    }

    fn primal_phase(&mut self) -> Result<LpStatus, LpError> {
        let m = self.nrows;
        let mut fresh = self.factor.num_updates() == 0;
        let mut col = vec![0.0; m];
        let mut rho = vec![0.0; m];
        loop {
            if let Some(st) = self.limits_hit() {
                return Ok(st);
            }
            if self.maybe_refactor()? {
                fresh = true;
            }
            let mut q = usize::MAX;
            let mut best = DUAL_TOL;
            for j in 0..self.x.len() {
                let inf = self.dual_infeasibility(j);
                if inf > DUAL_TOL && (self.bland || inf > best) {
                    if self.bland {
                        q = j;
                        break;
                    }
                    best = inf;
                    q = j;
                }
            }
            if q == usize::MAX {
                if !fresh {
                    self.refactor()?;
                    fresh = true;
                    continue;
                }
                if (0..m).any(|p| self.primal_infeasibility(self.head[p]) > 0.0) {
                    // Numerical drift: hand back to the dual phase.
                    return self.dual_phase();
                }
                return Ok(LpStatus::Optimal);
            }
            let dir = match self.state[q] {
                State::Lower => 1.0,
                State::Upper => -1.0,
                _ => {
                    if self.d[q] < 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
            };
            col.iter_mut().for_each(|v| *v = 0.0);
            let mut dense = std::mem::take(&mut self.r_a);
            dense.iter_mut().for_each(|v| *v = 0.0);
            self.load_column(q, &mut dense);
            self.factor.ftran(&mut dense, &mut col);
            self.r_a = dense;

            // Harris two-pass ratio test.
            let mut tmax = f64::INFINITY;
            for p in 0..m {
                let rate = -dir * col[p];
                if rate.abs() <= PIVOT_TOL {
                    continue;
                }
                let j = self.head[p];
                let lim = if rate < 0.0 {
                    (self.x[j] - self.lo[j] + PRIMAL_TOL) / -rate
                } else {
                    (self.up[j] - self.x[j] + PRIMAL_TOL) / rate
                };
                tmax = tmax.min(lim);
            }
            let mut r = usize::MAX;
            let mut r_step = f64::INFINITY;
            let mut r_mag = 0.0;
            if tmax.is_finite() {
                for p in 0..m {
                    let rate = -dir * col[p];
                    if rate.abs() <= PIVOT_TOL {
                        continue;
                    }
                    let j = self.head[p];
                    let t = if rate < 0.0 { (self.x[j] - self.lo[j]) / -rate } else { (self.up[j] - self.x[j]) / rate };
                    if t <= tmax {
                        let better = if self.bland {
                            r == usize::MAX || j < self.head[r]
                        } else {
                            rate.abs() > r_mag
                        };
                        if better {
                            r = p;
                            r_step = t.max(0.0);
                            r_mag = rate.abs();
                        }
                    }
                }
            }
            let range = self.up[q] - self.lo[q];
            if range.is_finite() && range <= r_step {
                // Bound flip of the entering variable.
                let dx = dir * range;
                for (p, &j) in self.head.iter().enumerate() {
                    self.x[j] -= dx * col[p];
                }
                self.state[q] = if dir > 0.0 { State::Upper } else { State::Lower };
                self.x[q] = self.nonbasic_value(q);
                self.iterations += 1;
                self.track_degeneracy(range);
                fresh = false;
                continue;
            }
            if r == usize::MAX {
                if !fresh {
                    self.refactor()?;
                    fresh = true;
                    continue;
                }
                return Ok(LpStatus::Unbounded);
            }
            let dx = dir * r_step;
            for (p, &j) in self.head.iter().enumerate() {
                if col[p] != 0.0 {
                    self.x[j] -= dx * col[p];
                }
            }
            self.x[q] += dx;
            let leaving_lower = -dir * col[r] < 0.0;

            let mut unit = std::mem::take(&mut self.r_d);
            unit.iter_mut().for_each(|v| *v = 0.0);
            unit[r] = 1.0;
            rho.iter_mut().for_each(|v| *v = 0.0);
            self.factor.btran(&mut unit, &mut rho);
            self.r_d = unit;
            self.price_row(&rho);
            let theta_d = self.d[q] / col[r];
            for &j in &self.v_touched {
                self.d[j] -= theta_d * self.v_alpha[j];
            }
            let p_var = self.head[r];
            self.d[p_var] = -theta_d;
            self.track_degeneracy(r_step);
            let leaving = if leaving_lower { State::Lower } else { State::Upper };
            self.replace_column(r, q, leaving, &col);
            self.dse[r] = 1.0;
            self.iterations += 1;
            fresh = false;
        }
    }

    fn finish(mut self, status: LpStatus) -> Outcome {
        if self.factor.num_updates() > 0 && matches!(status, LpStatus::Optimal) && self.refactor().is_ok() {
            // values and duals recomputed from a fresh factorization
        }
        let mut c = vec![0.0; self.nrows];
        for (p, &j) in self.head.iter().enumerate() {
            c[p] = self.cost[j];
        }
        let mut y = vec![0.0; self.nrows];
        self.factor.btran(&mut c, &mut y);
        let status_vec = self
            .state
            .iter()
            .map(|s| match s {
                State::Basic => VarStatus::Basic,
                State::Lower => VarStatus::AtLower,
                State::Upper => VarStatus::AtUpper,
                State::Zero => VarStatus::Free,
            })
            .collect();
        Outcome {
            status,
            x: self.x,
            y,
            d: self.d,
            iterations: self.iterations,
            basis: Basis { status: status_vec },
        }
    }
}
