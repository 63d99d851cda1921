//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! Columns are factored left to right (unit columns first, then by
//! increasing length). Each column is reduced by the current `L` using a
//! depth-first reach for its nonzero pattern, and the pivot is chosen among
//! entries within a threshold of the largest by smallest row count.

/// Entries below this magnitude are dropped from `L` and eta vectors.
const DROP_TOL: f64 = 1e-14;
/// Relative pivot threshold.
const PIVOT_THRESHOLD: f64 = 0.1;
/// Absolute magnitude under which a column is treated as dependent.
const SINGULAR_TOL: f64 = 1e-11;

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    idx: Vec<usize>,
    val: Vec<f64>,
}

/// A basis position whose column was dependent and got replaced by the unit
/// column of `row`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Replacement {
    pub pos: usize,
    pub row: usize,
}

#[derive(Debug, Clone)]
pub struct BasisFactor {
    m: usize,
    prow: Vec<usize>,
    bpos: Vec<usize>,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    u_diag: Vec<f64>,
    etas: Vec<Eta>,
    eta_nnz: usize,
}

impl BasisFactor {
    /// Factors the basis whose column at position `p` is produced by
    /// `column(p, &mut entries)` as `(row, value)` pairs.
    ///
    /// Dependent columns are replaced by `−e_row` for an unused row; the
    /// replacements are returned so the caller can update its basis.
    pub fn factorize<F>(m: usize, mut column: F) -> (Self, Vec<Replacement>)
    where
        F: FnMut(usize, &mut Vec<(usize, f64)>),
    {
        let mut cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
        let mut row_count = vec![0usize; m];
        for p in 0..m {
            let mut entries = Vec::new();
            column(p, &mut entries);
            entries.retain(|e| e.1 != 0.0);
            for &(r, _) in &entries {
                row_count[r] += 1;
            }
            cols.push(entries);
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (cols[p].len(), p));

        let mut f = BasisFactor {
            m,
            prow: Vec::with_capacity(m),
            bpos: Vec::with_capacity(m),
            l_ptr: vec![0],
            l_idx: Vec::new(),
            l_val: Vec::new(),
            u_ptr: vec![0],
            u_idx: Vec::new(),
            u_val: Vec::new(),
            u_diag: Vec::with_capacity(m),
            etas: Vec::new(),
            eta_nnz: 0,
        };
        let mut pivot_of_row = vec![usize::MAX; m];
        let mut work = vec![0.0; m];
        let mut mark = vec![0usize; m];
        let mut stamp = 0usize;
        let mut topo: Vec<usize> = Vec::new();
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let mut deficient = Vec::new();

        for &p in &order {
            stamp += 1;
            topo.clear();
            // Reach of the column pattern in the graph of L, in postorder.
            for &(start, _) in &cols[p] {
                if mark[start] == stamp {
                    continue;
                }
                mark[start] = stamp;
                stack.push((start, 0));
                while let Some(&mut (node, ref mut child)) = stack.last_mut() {
                    let k = pivot_of_row[node];
                    let next = if k == usize::MAX {
                        None
                    } else {
                        let range = f.l_ptr[k]..f.l_ptr[k + 1];
                        let mut found = None;
                        while *child < range.len() {
                            let r = f.l_idx[range.start + *child];
                            *child += 1;
                            if mark[r] != stamp {
                                found = Some(r);
                                break;
                            }
                        }
                        found
                    };
                    match next {
                        Some(r) => {
                            mark[r] = stamp;
                            stack.push((r, 0));
                        }
                        None => {
                            topo.push(node);
                            stack.pop();
                        }
                    }
                }
            }
            for &(r, v) in &cols[p] {
                work[r] = v;
            }
            for &r in topo.iter().rev() {
                let k = pivot_of_row[r];
                if k == usize::MAX {
                    continue;
                }
                let v = work[r];
                if v == 0.0 {
                    continue;
                }
                for t in f.l_ptr[k]..f.l_ptr[k + 1] {
                    work[f.l_idx[t]] -= f.l_val[t] * v;
                }
            }
            let mut amax: f64 = 0.0;
            for &r in &topo {
                if pivot_of_row[r] == usize::MAX {
                    amax = amax.max(work[r].abs());
                }
            }
            if amax < SINGULAR_TOL {
                for &r in &topo {
                    work[r] = 0.0;
                }
                deficient.push(p);
                continue;
            }
            let mut piv_row = usize::MAX;
            let mut best = (usize::MAX, 0.0f64);
            for &r in &topo {
                if pivot_of_row[r] != usize::MAX {
                    continue;
                }
                let a = work[r].abs();
                if a >= PIVOT_THRESHOLD * amax && (row_count[r] < best.0 || (row_count[r] == best.0 && a > best.1)) {
                    best = (row_count[r], a);
                    piv_row = r;
                }
            }
            let piv = work[piv_row];
            let k = f.prow.len();
            for &r in &topo {
                let v = work[r];
                work[r] = 0.0;
                if r == piv_row || v == 0.0 {
                    continue;
                }
                let kk = pivot_of_row[r];
                if kk == usize::MAX {
                    let l = v / piv;
                    if l.abs() > DROP_TOL {
                        f.l_idx.push(r);
                        f.l_val.push(l);
                    }
                } else {
                    f.u_idx.push(kk);
                    f.u_val.push(v);
                }
            }
            f.l_ptr.push(f.l_idx.len());
            f.u_ptr.push(f.u_idx.len());
            f.u_diag.push(piv);
            f.prow.push(piv_row);
            f.bpos.push(p);
            pivot_of_row[piv_row] = k;
            for &(r, _) in &cols[p] {
                row_count[r] -= 1;
            }
        }

        let mut replacements = Vec::new();
        if !deficient.is_empty() {
            let free_rows: Vec<usize> = (0..m).filter(|&r| pivot_of_row[r] == usize::MAX).collect();
            for (&p, &r) in deficient.iter().zip(&free_rows) {
                let k = f.prow.len();
                f.l_ptr.push(f.l_idx.len());
                f.u_ptr.push(f.u_idx.len());
                f.u_diag.push(-1.0);
                f.prow.push(r);
                f.bpos.push(p);
                pivot_of_row[r] = k;
                replacements.push(Replacement { pos: p, row: r });
            }
        }
        (f, replacements)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn num_updates(&self) -> usize {
        self.etas.len()
    }

    pub fn eta_nnz(&self) -> usize {
        self.eta_nnz
    }

    pub fn lu_nnz(&self) -> usize {
        self.l_idx.len() + self.u_idx.len() + self.m
    }

    /// Ratio of the largest to the smallest pivot magnitude.
    pub fn condition_estimate(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for &d in &self.u_diag {
            lo = lo.min(d.abs());
            hi = hi.max(d.abs());
        }
        if self.m == 0 {
            1.0
        } else {
            hi / lo
        }
    }

    /// Solves `B z = b`. `rhs` is indexed by row and is overwritten; the
    /// result is indexed by basis position.
    pub fn ftran(&self, rhs: &mut [f64], out: &mut [f64]) {
        let m = self.m;
        for k in 0..m {
            let v = rhs[self.prow[k]];
            if v == 0.0 {
                continue;
            }
            for t in self.l_ptr[k]..self.l_ptr[k + 1] {
                rhs[self.l_idx[t]] -= self.l_val[t] * v;
            }
        }
        for k in (0..m).rev() {
            let v = rhs[self.prow[k]] / self.u_diag[k];
            rhs[self.prow[k]] = 0.0;
            out[self.bpos[k]] = v;
            if v == 0.0 {
                continue;
            }
            for t in self.u_ptr[k]..self.u_ptr[k + 1] {
                rhs[self.prow[self.u_idx[t]]] -= self.u_val[t] * v;
            }
        }
        for eta in &self.etas {
            let v = out[eta.pos] / eta.pivot;
            out[eta.pos] = v;
            if v == 0.0 {
                continue;
            }
            for (&i, &a) in eta.idx.iter().zip(&eta.val) {
                out[i] -= a * v;
            }
        }
    }

    /// Solves `Bᵀ y = c`. `rhs` is indexed by basis position and is
    /// overwritten; the result is indexed by row.
    pub fn btran(&self, rhs: &mut [f64], out: &mut [f64]) {
        let m = self.m;
        for eta in self.etas.iter().rev() {
            let mut s = rhs[eta.pos];
            for (&i, &a) in eta.idx.iter().zip(&eta.val) {
                s -= a * rhs[i];
            }
            rhs[eta.pos] = s / eta.pivot;
        }
        // Uᵀ s = c in pivot order; reuse `out` indexed by pivot row.
        for k in 0..m {
            let mut s = rhs[self.bpos[k]];
            for t in self.u_ptr[k]..self.u_ptr[k + 1] {
                s -= self.u_val[t] * out[self.prow[self.u_idx[t]]];
            }
            out[self.prow[k]] = s / self.u_diag[k];
        }
        for k in (0..m).rev() {
            let mut s = out[self.prow[k]];
            for t in self.l_ptr[k]..self.l_ptr[k + 1] {
                s -= self.l_val[t] * out[self.l_idx[t]];
            }
            out[self.prow[k]] = s;
        }
        rhs.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Records the replacement of the column at `pos` by a column whose
    /// representation in the current basis is `alpha` (indexed by position).
    pub fn update(&mut self, pos: usize, alpha: &[f64]) {
        let pivot = alpha[pos];
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for (i, &a) in alpha.iter().enumerate() {
            if i != pos && a.abs() > DROP_TOL {
                idx.push(i);
                val.push(a);
            }
        }
        self.eta_nnz += idx.len() + 1;
        self.etas.push(Eta { pos, pivot, idx, val });
    }
}
