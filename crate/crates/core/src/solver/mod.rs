//! Branch-and-bound, primal heuristics and exhaustive search.

mod bnb;
mod brute_force;
mod heuristics;

pub use bnb::{
    branch_and_bound, branch_and_bound_with, BnbConfig, HeuristicConfig, NodeSelection, SolveResult, SolveStatus,
    TracePoint, PRUNE_TOL,
};
pub use brute_force::{brute_force, BruteForceResult, BRUTE_FORCE_LIMIT};
pub use heuristics::{exchange_improvement, exchange_improvement_traced, greedy_heuristic, rounding_heuristic};

use thiserror::Error;

use crate::lp::LpError;
use crate::markov::MarkovError;
use crate::mip::MipError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("LP failure at node {node} (depth {depth}): {source}")]
    Lp { node: usize, depth: usize, source: LpError },
    #[error("exhaustive search over {m}^{} assignments exceeds the limit", .n - 1)]
    TooLarge { n: usize, m: usize },
    #[error("invalid cluster count {m} for {n} bins")]
    InvalidClusterCount { m: usize, n: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model does not match the flow matrix: {0}")]
    ModelMismatch(String),
    #[error(transparent)]
    Mip(#[from] MipError),
    #[error(transparent)]
    Markov(#[from] MarkovError),
}
