//! Nine bins in three groups with a weak cyclic current between the group
//! hubs 1 → 2 → 3 → 1.
//!
//! Each hub `h` is linked reversibly to two satellites, and all remaining
//! mass sits on the diagonal so every bin carries the same stationary mass.
//! Entries are integers over [`TRIANGLE_DENOMINATOR`].

use crate::markov::{FlowMatrix, TransitionMatrix};

pub const TRIANGLE_DENOMINATOR: u32 = 180;

const SATELLITE_LINK: u32 = 4;
const CYCLE_FORWARD: u32 = 3;
const CYCLE_BACKWARD: u32 = 1;
const HUB_DIAGONAL: u32 = 8;
const SATELLITE_DIAGONAL: u32 = 16;

/// Integer numerators of the flow matrix, 0-based bins.
pub fn triangle_numerators() -> [[u32; 9]; 9] {
    let mut q = [[0u32; 9]; 9];
    for hub in 0..3 {
        q[hub][hub] = HUB_DIAGONAL;
        q[hub][(hub + 1) % 3] = CYCLE_FORWARD;
        q[hub][(hub + 2) % 3] = CYCLE_BACKWARD;
        for s in [3 + 2 * hub, 4 + 2 * hub] {
            q[hub][s] = SATELLITE_LINK;
            q[s][hub] = SATELLITE_LINK;
            q[s][s] = SATELLITE_DIAGONAL;
        }
    }
    q
}

pub fn triangle_fixture() -> FlowMatrix {
    let d = f64::from(TRIANGLE_DENOMINATOR);
    let data = triangle_numerators().iter().flatten().map(|&v| f64::from(v) / d).collect();
    FlowMatrix::from_flat(9, data).expect("fixture is a valid flow matrix")
}

/// Row-normalized form of the fixture. Every row has mass 1/9.
pub fn triangle_transition_matrix() -> TransitionMatrix {
    let q = triangle_numerators();
    let data = q
        .iter()
        .flat_map(|row| {
            let s: u32 = row.iter().sum();
            row.iter().map(move |&v| f64::from(v) / f64::from(s))
        })
        .collect();
    TransitionMatrix::from_flat(9, data).expect("rows are normalized")
}

/// Hubs with their satellites, 1-based: {1,4,5}, {2,6,7}, {3,8,9}.
pub fn triangle_natural_clusters() -> Vec<Vec<usize>> {
    vec![vec![1, 4, 5], vec![2, 6, 7], vec![3, 8, 9]]
}
