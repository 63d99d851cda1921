//! Exhaustive enumeration of clusterings with bin 0 in cluster 0.

use super::SolverError;
use crate::cycle::{objective, CycleClustering, ObjectiveValue};
use crate::markov::FlowMatrix;

/// Largest admissible `m^(n−1)`.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub clustering: CycleClustering,
    pub objective: ObjectiveValue,
    /// Number of surjective assignments evaluated.
    pub evaluated: usize,
}

fn total(w: &FlowMatrix, a: &[usize], m: usize, alpha: f64) -> f64 {
    let n = w.n();
    let mut value = 0.0;
    for i in 0..n {
        let row = w.row(i);
        let (ki, next) = (a[i], (a[i] + 1) % m);
        for j in 0..n {
            if a[j] == ki {
                value += alpha * row[j];
            } else if a[j] == next {
                value += row[j] - w.get(j, i);
            }
        }
    }
    value
}

/// Maximizer over all surjective assignments; ties go to the
/// lexicographically smallest assignment.
pub fn brute_force(w: &FlowMatrix, m: usize, alpha: f64) -> Result<BruteForceResult, SolverError> {
    let n = w.n();
    if m == 0 || m > n {
        return Err(SolverError::InvalidClusterCount { m, n });
    }
    if (m as f64).powi(n as i32 - 1) > BRUTE_FORCE_LIMIT {
        return Err(SolverError::TooLarge { n, m });
    }
    let mut a = vec![0usize; n];
    let mut counts = vec![0usize; m];
    counts[0] = n;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut evaluated = 0;
    loop {
        if counts.iter().all(|&c| c > 0) {
            evaluated += 1;
            let v = total(w, &a, m, alpha);
            if best.as_ref().is_none_or(|b| v > b.0) {
                best = Some((v, a.clone()));
            }
        }
        // odometer over positions 1..n, last position fastest
        let mut pos = n - 1;
        loop {
            if pos == 0 {
                let (_, a) = best.expect("m <= n admits a surjection");
                let clustering = CycleClustering::new(m, a).expect("surjective");
                let objective = objective(w, &clustering, alpha)?;
                return Ok(BruteForceResult { clustering, objective, evaluated });
            }
            counts[a[pos]] -= 1;
            if a[pos] + 1 < m {
                a[pos] += 1;
                counts[a[pos]] += 1;
                break;
            }
            a[pos] = 0;
            counts[0] += 1;
            pos -= 1;
        }
    }
}
