//! LP relaxation of a [`MipInstance`] and its simplex solver.

pub mod lu;
mod simplex;
pub mod sparse;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mip::{MipInstance, Sense};
use simplex::{Settings, Simplex};
use sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("override for variable {index} has lower bound {lower} above upper bound {upper}")]
    InvalidBounds { index: usize, lower: f64, upper: f64 },
    #[error("override refers to variable {index}, model has {count}")]
    UnknownVariable { index: usize, count: usize },
    #[error("basis condition estimate {condition:e} exceeds limit")]
    NumericalFailure { condition: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    TimeLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    Free,
}

/// Status of every structural column followed by every row.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Basis {
    pub status: Vec<VarStatus>,
}

/// Tightened bounds for one structural variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundOverride {
    pub var: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct LpOptions {
    /// Defaults to `200 · (rows + cols)`.
    pub iteration_limit: Option<usize>,
    pub deadline: Option<Instant>,
    pub bland_after: usize,
    pub refactor_interval: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self { iteration_limit: None, deadline: None, bland_after: 1000, refactor_interval: 64 }
    }
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    /// Maximization objective at `values`.
    pub objective: f64,
    pub values: Vec<f64>,
    pub row_activity: Vec<f64>,
    pub row_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
    pub basis: Option<Basis>,
}

/// `max objᵀx` subject to `row_lower ≤ A x ≤ row_upper`, `col_lower ≤ x ≤ col_upper`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub a: SparseMatrix,
    pub obj: Vec<f64>,
    pub col_lower: Vec<f64>,
    pub col_upper: Vec<f64>,
    pub row_lower: Vec<f64>,
    pub row_upper: Vec<f64>,
}

impl LpProblem {
    /// Continuous relaxation: integrality dropped, bounds kept.
    pub fn from_mip(mip: &MipInstance) -> Self {
        let mut triplets = Vec::new();
        let mut row_lower = Vec::with_capacity(mip.constraints.len());
        let mut row_upper = Vec::with_capacity(mip.constraints.len());
        for (i, c) in mip.constraints.iter().enumerate() {
            triplets.extend(c.coeffs.iter().map(|&(j, v)| (i, j, v)));
            let (lo, up) = match c.sense {
                Sense::Le => (f64::NEG_INFINITY, c.rhs),
                Sense::Ge => (c.rhs, f64::INFINITY),
                Sense::Eq => (c.rhs, c.rhs),
            };
            row_lower.push(lo);
            row_upper.push(up);
        }
        let nvars = mip.variables.len();
        Self {
            a: SparseMatrix::from_triplets(mip.constraints.len(), nvars, &triplets),
            obj: mip.variables.iter().map(|v| v.obj).collect(),
            col_lower: mip.variables.iter().map(|v| v.lower).collect(),
            col_upper: mip.variables.iter().map(|v| v.upper).collect(),
            row_lower,
            row_upper,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_cols(&self) -> usize {
        self.a.ncols()
    }

    /// Column bounds after intersecting with `overrides`. Crossed bounds are
    /// returned as such; the solver reports them as infeasible.
    pub fn bounds_with(&self, overrides: &[BoundOverride]) -> Result<(Vec<f64>, Vec<f64>), LpError> {
        let mut lo = self.col_lower.clone();
        let mut up = self.col_upper.clone();
        for o in overrides {
            if o.var >= lo.len() {
                return Err(LpError::UnknownVariable { index: o.var, count: lo.len() });
            }
            if !(o.lower <= o.upper) {
                return Err(LpError::InvalidBounds { index: o.var, lower: o.lower, upper: o.upper });
            }
            lo[o.var] = lo[o.var].max(o.lower);
            up[o.var] = up[o.var].min(o.upper);
        }
        Ok((lo, up))
    }

    /// Solves with explicit column bounds, optionally warm-started.
    pub fn solve(
        &self,
        col_lower: &[f64],
        col_upper: &[f64],
        warm: Option<&Basis>,
        options: &LpOptions,
    ) -> Result<LpResult, LpError> {
        let (nrows, ncols) = (self.num_rows(), self.num_cols());
        if col_lower.iter().zip(col_upper).any(|(l, u)| l > u) {
            return Ok(self.infeasible_result(col_lower, col_upper));
        }
        let mut lo = col_lower.to_vec();
        let mut up = col_upper.to_vec();
        lo.extend_from_slice(&self.row_lower);
        up.extend_from_slice(&self.row_upper);
        let cost: Vec<f64> = self.obj.iter().map(|c| -c).collect();
        let settings = || Settings {
            iteration_limit: options.iteration_limit.unwrap_or(200 * (nrows + ncols)),
            deadline: options.deadline,
            bland_after: options.bland_after,
            refactor_interval: options.refactor_interval,
        };
        let attempt = |warm: Option<&Basis>| {
            Simplex::new(&self.a, &cost, lo.clone(), up.clone(), warm, settings())?.run()
        };
        let outcome = match attempt(warm) {
            Ok(o) => o,
            Err(LpError::NumericalFailure { condition }) => {
                log::debug!("lp: numerical failure (condition {condition:e}), retrying from scratch");
                attempt(None)?
            }
            Err(e) => return Err(e),
        };
        let values = outcome.x[..ncols].to_vec();
        let row_activity = outcome.x[ncols..].to_vec();
        let objective = self.obj.iter().zip(&values).map(|(c, x)| c * x).sum();
        Ok(LpResult {
            status: outcome.status,
            objective,
            values,
            row_activity,
            row_duals: outcome.y.iter().map(|v| -v).collect(),
            reduced_costs: outcome.d[..ncols].iter().map(|v| -v).collect(),
            iterations: outcome.iterations,
            basis: Some(outcome.basis),
        })
    }

    fn infeasible_result(&self, lo: &[f64], up: &[f64]) -> LpResult {
        let values: Vec<f64> = lo
            .iter()
            .zip(up)
            .map(|(&l, &u)| if l.is_finite() { l } else if u.is_finite() { u } else { 0.0 })
            .collect();
        let mut row_activity = vec![0.0; self.num_rows()];
        self.a.mul_add(&values, &mut row_activity);
        LpResult {
            status: LpStatus::Infeasible,
            objective: f64::NEG_INFINITY,
            values,
            row_activity,
            row_duals: vec![0.0; self.num_rows()],
            reduced_costs: vec![0.0; self.num_cols()],
            iterations: 0,
            basis: None,
        }
    }

    /// Largest bound or row violation of `values`.
    pub fn primal_residual(&self, col_lower: &[f64], col_upper: &[f64], values: &[f64]) -> f64 {
        let mut act = vec![0.0; self.num_rows()];
        self.a.mul_add(values, &mut act);
        let rows = act
            .iter()
            .zip(self.row_lower.iter().zip(&self.row_upper))
            .map(|(&v, (&l, &u))| (l - v).max(v - u).max(0.0));
        let cols = values
            .iter()
            .zip(col_lower.iter().zip(col_upper))
            .map(|(&v, (&l, &u))| (l - v).max(v - u).max(0.0));
        rows.chain(cols).fold(0.0, f64::max)
    }
}

/// Relaxation of `mip` with tightened bounds, default options.
pub fn solve_lp(mip: &MipInstance, overrides: &[BoundOverride]) -> Result<LpResult, LpError> {
    let problem = LpProblem::from_mip(mip);
    let (lo, up) = problem.bounds_with(overrides)?;
    problem.solve(&lo, &up, None, &LpOptions::default())
}
