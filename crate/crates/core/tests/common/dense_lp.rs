//! Dense two-phase tableau simplex with Bland's rule, used as an
//! independent check on the sparse solver.

use cyclust_core::mip::{MipInstance, Sense};

const EPS: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-7;

pub enum DenseOutcome {
    Optimal(f64, Vec<f64>),
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>, // last column is the rhs
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r && row[c].abs() > 0.0 {
                let f = row[c];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes `cost · z` over columns `< allowed`; Bland's rule.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> bool {
        let mut reduced = cost.to_vec();
        reduced.push(0.0);
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = cost[b];
            if cb != 0.0 {
                reduced.iter_mut().zip(row).for_each(|(d, v)| *d -= cb * v);
            }
        }
        loop {
            let entering = (0..allowed).find(|&j| reduced[j] > EPS);
            let Some(q) = entering else { return true };
            let rhs = self.ncols;
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[q] > PIVOT_TOL {
                    let t = row[rhs].max(0.0) / row[q];
                    let better = match leave {
                        None => true,
                        Some((l, lt)) => {
                            t < lt - EPS || (t <= lt + EPS && (row[q], std::cmp::Reverse(self.basis[i])) > (self.rows[l][q], std::cmp::Reverse(self.basis[l])))
                        }
                    };
                    if better {
                        leave = Some((i, t));
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            self.pivot(r, q);
            let f = reduced[q];
            reduced.iter_mut().zip(&self.rows[r]).for_each(|(d, v)| *d -= f * v);
        }
    }
}

/// Solves the continuous relaxation of `mip`. Every variable needs a finite
/// lower bound.
pub fn solve_relaxation(mip: &MipInstance) -> DenseOutcome {
    let nv = mip.variables.len();
    let lower: Vec<f64> = mip.variables.iter().map(|v| v.lower).collect();
    assert!(lower.iter().all(|l| l.is_finite()));
    // rows over shifted variables z = x − lower ≥ 0
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::new();
    for c in &mip.constraints {
        let mut a = vec![0.0; nv];
        let mut rhs = c.rhs;
        for &(j, v) in &c.coeffs {
            a[j] += v;
            rhs -= v * lower[j];
        }
        rows.push((a, c.sense, rhs));
    }
    for (j, v) in mip.variables.iter().enumerate() {
        if v.upper.is_finite() {
            let mut a = vec![0.0; nv];
            a[j] = 1.0;
            rows.push((a, Sense::Le, v.upper - v.lower));
        }
    }
    for r in rows.iter_mut() {
        if r.2 < 0.0 {
            r.0.iter_mut().for_each(|v| *v = -*v);
            r.2 = -r.2;
            r.1 = match r.1 {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }
    let nslack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let nart = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let ncols = nv + nslack + nart;
    let mut t = Tableau { rows: Vec::new(), basis: Vec::new(), ncols };
    let (mut s, mut a) = (nv, nv + nslack);
    for (coef, sense, rhs) in &rows {
        let mut row = vec![0.0; ncols + 1];
        row[..nv].copy_from_slice(coef);
        row[ncols] = *rhs;
        match sense {
            Sense::Le => {
                row[s] = 1.0;
                t.basis.push(s);
                s += 1;
            }
            Sense::Ge => {
                row[s] = -1.0;
                s += 1;
                row[a] = 1.0;
                t.basis.push(a);
                a += 1;
            }
            Sense::Eq => {
                row[a] = 1.0;
                t.basis.push(a);
                a += 1;
            }
        }
        t.rows.push(row);
    }
    let mut phase1 = vec![0.0; ncols];
    phase1[nv + nslack..].iter_mut().for_each(|v| *v = -1.0);
    t.optimize(&phase1, ncols);
    let infeas: f64 = t.basis.iter().zip(&t.rows).filter(|(&b, _)| b >= nv + nslack).map(|(_, r)| r[ncols]).sum();
    if infeas > 1e-8 {
        return DenseOutcome::Infeasible;
    }
    // drive remaining artificials out of the basis where possible
    for r in 0..t.rows.len() {
        if t.basis[r] >= nv + nslack {
            if let Some(q) = (0..nv + nslack).find(|&j| t.rows[r][j].abs() > PIVOT_TOL) {
                t.pivot(r, q);
            }
        }
    }
    let mut cost = vec![0.0; ncols];
    for (j, v) in mip.variables.iter().enumerate() {
        cost[j] = v.obj;
    }
    if !t.optimize(&cost, nv + nslack) {
        return DenseOutcome::Unbounded;
    }
    let mut x = lower.clone();
    for (r, &b) in t.basis.iter().enumerate() {
        if b < nv {
            x[b] += t.rows[r][ncols];
        }
    }
    let obj = mip.variables.iter().zip(&x).map(|(v, xv)| v.obj * xv).sum();
    DenseOutcome::Optimal(obj, x)
}
