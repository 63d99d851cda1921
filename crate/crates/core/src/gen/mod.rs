//! Instance generators: sampled energy landscapes, the repressilator, a small
//! hand-built fixture and the multiway-cut reduction.

pub mod binning;
pub mod hmc;
pub mod multiway;
pub mod repressilator;
pub mod triangle;

use thiserror::Error;

use crate::markov::MarkovError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("requested {requested} centers but only {available} distinct points are available")]
    TooFewPoints { requested: usize, available: usize },
    #[error("row {0} has vanishing membership mass")]
    DegenerateRow(usize),
    #[error("integration produced a non-finite state at t = {0}")]
    NonFiniteState(f64),
    #[error("expected {expected} items, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("multiway cut needs at least 3 terminals, got {0}")]
    InvalidTerminalCount(usize),
    #[error("non-terminal vertex {0} has no incident weight")]
    IsolatedNonTerminal(usize),
    #[error("edge {0}-{1} joins two terminals")]
    TerminalEdge(usize, usize),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Markov(#[from] MarkovError),
}
