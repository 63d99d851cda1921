#![allow(dead_code)]

pub mod dense_lp;

use cyclust_core::markov::{flow_matrix, stationary_distribution, DEFAULT_STATIONARY_MAX_ITER};

/// Tight enough that Δ row sums stay below 1e-10.
pub const STATIONARY_TOL: f64 = 1e-12;
use cyclust_core::{FlowMatrix, TransitionMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random row-stochastic matrix with roughly `zero_frac` of the off-diagonal
/// entries zeroed, and its flow matrix. The ring `i → i+1` is always kept so
/// the chain is irreducible.
pub fn random_flow(n: usize, zero_frac: f64, seed: u64) -> FlowMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let raw: Vec<f64> = (0..n)
                .map(|j| {
                    let ring = j == (i + 1) % n;
                    if i != j && !ring && rng.random::<f64>() < zero_frac { 0.0 } else { rng.random::<f64>() + 0.01 }
                })
                .collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        })
        .collect();
    let p = TransitionMatrix::new(&rows).unwrap();
    let pi = stationary_distribution(&p, STATIONARY_TOL, DEFAULT_STATIONARY_MAX_ITER).unwrap();
    flow_matrix(&p, &pi).unwrap()
}

/// Random symmetric flow matrix.
pub fn random_symmetric_flow(n: usize, seed: u64) -> FlowMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v: f64 = rng.random();
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
    }
    let s: f64 = q.iter().sum();
    FlowMatrix::from_flat(n, q.iter().map(|v| v / s).collect()).unwrap()
}
