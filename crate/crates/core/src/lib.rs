//! Cycle clustering of non-reversible Markov processes.
//!
//! Given a flow matrix `W = diag(π) P`, find a partition of the bins into `m`
//! cyclically ordered clusters maximizing the net flow between consecutive
//! clusters plus `α` times the coherence of the clusters. The optimum is
//! computed by LP-based branch-and-bound over a linearized mixed-integer
//! model; see [`solver::branch_and_bound`].

pub mod cycle;
pub mod gen;
pub mod io;
pub mod lp;
pub mod markov;
pub mod mip;
pub mod solver;

pub use cycle::{objective, CycleClustering, ObjectiveValue, DEFAULT_ALPHA};
pub use markov::{flow_matrix, stationary_distribution, FlowMatrix, StationaryDistribution, TransitionMatrix};
pub use mip::{build_mip, MipInstance};
