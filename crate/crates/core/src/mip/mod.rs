//! Linearized mixed-integer model for cycle clustering.
//!
//! Variables, in order:
//! * `x_i_k` binary, bin `i` assigned to cluster `k`;
//! * `e_i_j_k` for the product `x_i_k · x_j_succ(k)`, only where `q_ij ≠ q_ji`;
//! * `c_i_j_k` for the product `x_i_k · x_j_k` with `i < j`, only where `q_ij + q_ji > 0`;
//! * `f_k` net flow from cluster `k` to its successor;
//! * `g_k` coherence of cluster `k`.
//!
//! All names use 1-based indices.

mod lp_format;

pub use lp_format::{export_model, parse_model};

use thiserror::Error;

use crate::cycle::{objective, ClusteringError, CycleClustering, ObjectiveValue};
use crate::markov::{FlowMatrix, MarkovError};

/// Distance from {0, 1} tolerated for assignment variables in a solution.
pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MipError {
    #[error("invalid cluster count {m} for {n} bins (need 3 <= m <= n)")]
    InvalidClusterCount { m: usize, n: usize },
    #[error("alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("variable {var} has fractional value {value}")]
    FractionalSolution { var: String, value: f64 },
    #[error("infeasible assignment: {0}")]
    InfeasibleAssignment(String),
    #[error("model objective {mip} disagrees with direct objective {direct}")]
    ObjectiveMismatch { mip: f64, direct: f64 },
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub obj: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Amount by which `values` violate this row, zero when satisfied.
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MipMeta {
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
}

/// A product variable and the two binaries it linearizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Product {
    pub var: usize,
    pub a: usize,
    pub b: usize,
}

/// Maximization model with named variables and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MipInstance {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub meta: MipMeta,
}

/// Positions of the variable groups, recovered from variable names.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub flow_products: Vec<Product>,
    pub coherence_products: Vec<Product>,
    pub flow: Vec<usize>,
    pub coherence: Vec<usize>,
}

fn var(name: String, kind: VarKind, lower: f64, upper: f64, obj: f64) -> Variable {
    Variable { name, kind, lower, upper, obj }
}

/// Builds the linearized model for `m` clusters. Requires `3 ≤ m ≤ n`.
pub fn build_mip(w: &FlowMatrix, m: usize, alpha: f64) -> Result<MipInstance, MipError> {
    let n = w.n();
    if m < 3 || m > n {
        return Err(MipError::InvalidClusterCount { m, n });
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(MipError::InvalidAlpha(alpha));
    }
    let x = |i: usize, k: usize| i * m + k;
    let succ = |k: usize| (k + 1) % m;

    let mut variables = Vec::new();
    for i in 0..n {
        for k in 0..m {
            let lower = if i == 0 && k == 0 { 1.0 } else { 0.0 };
            variables.push(var(format!("x_{}_{}", i + 1, k + 1), VarKind::Binary, lower, 1.0, 0.0));
        }
    }

    let mut flow_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    let mut flow_products = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let d = w.get(i, j) - w.get(j, i);
            if i == j || d == 0.0 {
                continue;
            }
            for k in 0..m {
                let v = variables.len();
                variables.push(var(
                    format!("e_{}_{}_{}", i + 1, j + 1, k + 1),
                    VarKind::Continuous,
                    0.0,
                    1.0,
                    0.0,
                ));
                flow_terms[k].push((v, d));
                flow_products.push(Product { var: v, a: x(i, k), b: x(j, succ(k)) });
            }
        }
    }

    let mut coh_terms: Vec<Vec<(usize, f64)>> =
        (0..m).map(|k| (0..n).filter(|&i| w.get(i, i) != 0.0).map(|i| (x(i, k), w.get(i, i))).collect()).collect();
    let mut coherence_products = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let s = w.get(i, j) + w.get(j, i);
            if s == 0.0 {
                continue;
            }
            for (k, terms) in coh_terms.iter_mut().enumerate() {
                let v = variables.len();
                variables.push(var(
                    format!("c_{}_{}_{}", i + 1, j + 1, k + 1),
                    VarKind::Continuous,
                    0.0,
                    1.0,
                    0.0,
                ));
                terms.push((v, s));
                coherence_products.push(Product { var: v, a: x(i, k), b: x(j, k) });
            }
        }
    }

    let f0 = variables.len();
    for k in 0..m {
        variables.push(var(format!("f_{}", k + 1), VarKind::Continuous, 0.0, f64::INFINITY, 1.0));
    }
    let g0 = variables.len();
    for k in 0..m {
        variables.push(var(format!("g_{}", k + 1), VarKind::Continuous, 0.0, f64::INFINITY, alpha));
    }

    let mut constraints = Vec::new();
    for i in 0..n {
        constraints.push(Constraint {
            name: format!("assign_{}", i + 1),
            coeffs: (0..m).map(|k| (x(i, k), 1.0)).collect(),
            sense: Sense::Eq,
            rhs: 1.0,
        });
    }
    for k in 0..m {
        constraints.push(Constraint {
            name: format!("cover_{}", k + 1),
            coeffs: (0..n).map(|i| (x(i, k), 1.0)).collect(),
            sense: Sense::Ge,
            rhs: 1.0,
        });
    }
    for (k, terms) in flow_terms.iter().enumerate() {
        let mut coeffs = vec![(f0 + k, 1.0)];
        coeffs.extend(terms.iter().map(|&(v, d)| (v, -d)));
        constraints.push(Constraint { name: format!("flow_{}", k + 1), coeffs, sense: Sense::Eq, rhs: 0.0 });
    }
    for (k, terms) in coh_terms.iter().enumerate() {
        let mut coeffs = vec![(g0 + k, 1.0)];
        coeffs.extend(terms.iter().map(|&(v, s)| (v, -s)));
        constraints.push(Constraint { name: format!("coh_{}", k + 1), coeffs, sense: Sense::Eq, rhs: 0.0 });
    }
    for p in flow_products.iter().chain(&coherence_products) {
        let name = &variables[p.var].name;
        constraints.push(Constraint {
            name: format!("{name}_ub1"),
            coeffs: vec![(p.var, 1.0), (p.a, -1.0)],
            sense: Sense::Le,
            rhs: 0.0,
        });
        constraints.push(Constraint {
            name: format!("{name}_ub2"),
            coeffs: vec![(p.var, 1.0), (p.b, -1.0)],
            sense: Sense::Le,
            rhs: 0.0,
        });
        constraints.push(Constraint {
            name: format!("{name}_lb"),
            coeffs: vec![(p.var, 1.0), (p.a, -1.0), (p.b, -1.0)],
            sense: Sense::Ge,
            rhs: -1.0,
        });
    }

    Ok(MipInstance { variables, constraints, meta: MipMeta { n, m, alpha } })
}

fn parse_indices(rest: &str) -> Option<Vec<usize>> {
    rest.split('_').map(|t| t.parse::<usize>().ok().filter(|&v| v > 0).map(|v| v - 1)).collect()
}

impl MipInstance {
    pub fn n(&self) -> usize {
        self.meta.n
    }

    pub fn m(&self) -> usize {
        self.meta.m
    }

    pub fn alpha(&self) -> f64 {
        self.meta.alpha
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    /// Index of `x_i_k` (0-based `i`, `k`). Assignment variables come first.
    #[inline]
    pub fn x_index(&self, i: usize, k: usize) -> usize {
        i * self.meta.m + k
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn constraint(&self, name: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.name == name)
    }

    pub fn count_prefix(&self, prefix: &str) -> usize {
        self.variables.iter().filter(|v| v.name.starts_with(prefix)).count()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.variables.iter().zip(values).map(|(v, &x)| v.obj * x).sum()
    }

    /// Largest bound or row violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(values));
        let bounds = self.variables.iter().zip(values).map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    /// Recovers the variable groups from their names and checks that the
    /// assignment variables occupy the first `n·m` slots.
    pub fn layout(&self) -> Result<Layout, MipError> {
        let (n, m) = (self.meta.n, self.meta.m);
        for i in 0..n {
            for k in 0..m {
                let want = format!("x_{}_{}", i + 1, k + 1);
                match self.variables.get(self.x_index(i, k)) {
                    Some(v) if v.name == want => {}
                    _ => return Err(MipError::Malformed(format!("expected `{want}` at position {}", self.x_index(i, k)))),
                }
            }
        }
        let mut layout = Layout {
            flow_products: Vec::new(),
            coherence_products: Vec::new(),
            flow: vec![usize::MAX; m],
            coherence: vec![usize::MAX; m],
        };
        for (idx, v) in self.variables.iter().enumerate().skip(n * m) {
            let bad = || MipError::Malformed(format!("unrecognized variable `{}`", v.name));
            let (kind, rest) = v.name.split_once('_').ok_or_else(bad)?;
            let ids = parse_indices(rest).ok_or_else(bad)?;
            let in_range = ids.iter().enumerate().all(|(p, &t)| t < if p + 1 == ids.len() { m } else { n });
            if !in_range {
                return Err(bad());
            }
            match (kind, ids.as_slice()) {
                ("e", &[i, j, k]) => layout.flow_products.push(Product {
                    var: idx,
                    a: self.x_index(i, k),
                    b: self.x_index(j, (k + 1) % m),
                }),
                ("c", &[i, j, k]) => layout.coherence_products.push(Product {
                    var: idx,
                    a: self.x_index(i, k),
                    b: self.x_index(j, k),
                }),
                ("f", &[k]) => layout.flow[k] = idx,
                ("g", &[k]) => layout.coherence[k] = idx,
                _ => return Err(bad()),
            }
        }
        if layout.flow.iter().chain(&layout.coherence).any(|&v| v == usize::MAX) {
            return Err(MipError::Malformed("missing flow or coherence variable".into()));
        }
        Ok(layout)
    }

    /// Full variable vector implied by a clustering: assignment binaries,
    /// exact products, and `f_k`, `g_k` read off their defining rows.
    pub fn solution_from_clustering(&self, c: &CycleClustering) -> Result<Vec<f64>, MipError> {
        let (n, m) = (self.meta.n, self.meta.m);
        if c.n() != n || c.m() != m {
            return Err(MipError::DimensionMismatch { expected: n, got: c.n() });
        }
        let layout = self.layout()?;
        let mut values = vec![0.0; self.variables.len()];
        for (i, &k) in c.assignment().iter().enumerate() {
            values[self.x_index(i, k)] = 1.0;
        }
        for p in layout.flow_products.iter().chain(&layout.coherence_products) {
            values[p.var] = values[p.a] * values[p.b];
        }
        for &defined in layout.flow.iter().chain(&layout.coherence) {
            let row = self
                .constraints
                .iter()
                .find(|r| r.sense == Sense::Eq && r.coeffs.first() == Some(&(defined, 1.0)))
                .ok_or_else(|| MipError::Malformed(format!("no defining row for `{}`", self.variables[defined].name)))?;
            values[defined] = row.rhs - row.coeffs[1..].iter().map(|&(j, a)| a * values[j]).sum::<f64>();
        }
        Ok(values)
    }
}

/// Reads the clustering encoded by a 0/1 solution and checks it against a
/// direct evaluation of the objective on `w`.
pub fn clustering_from_solution(
    mip: &MipInstance,
    w: &FlowMatrix,
    values: &[f64],
) -> Result<(CycleClustering, ObjectiveValue), MipError> {
    let (n, m) = (mip.meta.n, mip.meta.m);
    if values.len() != mip.variables.len() {
        return Err(MipError::DimensionMismatch { expected: mip.variables.len(), got: values.len() });
    }
    if w.n() != n {
        return Err(MipError::DimensionMismatch { expected: n, got: w.n() });
    }
    let mut assignment = vec![usize::MAX; n];
    for i in 0..n {
        for k in 0..m {
            let j = mip.x_index(i, k);
            let v = values[j];
            let r = v.round();
            if (v - r).abs() > INTEGRALITY_TOL || !(r == 0.0 || r == 1.0) {
                return Err(MipError::FractionalSolution { var: mip.variables[j].name.clone(), value: v });
            }
            if r == 1.0 {
                if assignment[i] != usize::MAX {
                    return Err(MipError::InfeasibleAssignment(format!("bin {} is in two clusters", i + 1)));
                }
                assignment[i] = k;
            }
        }
        if assignment[i] == usize::MAX {
            return Err(MipError::InfeasibleAssignment(format!("bin {} is unassigned", i + 1)));
        }
    }
    let c = CycleClustering::new(m, assignment).map_err(|e| match e {
        ClusteringError::EmptyCluster(k) => MipError::InfeasibleAssignment(format!("cluster {} is empty", k + 1)),
        other => other.into(),
    })?;
    let direct = objective(w, &c, mip.meta.alpha)?;
    let model = mip.objective_value(values);
    if (model - direct.total).abs() > INTEGRALITY_TOL {
        return Err(MipError::ObjectiveMismatch { mip: model, direct: direct.total });
    }
    Ok((c, direct))
}
