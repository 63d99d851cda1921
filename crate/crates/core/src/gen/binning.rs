//! Bin centers by farthest-point selection and soft radial-basis membership.

use super::GenError;
use crate::markov::TransitionMatrix;

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Greedy farthest-point selection: the first point, then repeatedly the
/// point farthest from all chosen centers. Within a factor two of the
/// smallest achievable fill distance.
pub fn select_bin_centers<P: AsRef<[f64]> + Clone>(points: &[P], n: usize) -> Result<Vec<P>, GenError> {
    if n == 0 {
        return Err(GenError::InvalidParameter("need at least one center".into()));
    }
    if points.is_empty() {
        return Err(GenError::TooFewPoints { requested: n, available: 0 });
    }
    let mut centers = vec![points[0].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| dist2(p.as_ref(), points[0].as_ref())).collect();
    while centers.len() < n {
        let (k, &d) = nearest
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("non-empty");
        if d == 0.0 {
            return Err(GenError::TooFewPoints { requested: n, available: centers.len() });
        }
        centers.push(points[k].clone());
        for (near, p) in nearest.iter_mut().zip(points) {
            *near = near.min(dist2(p.as_ref(), points[k].as_ref()));
        }
    }
    Ok(centers)
}

/// Largest distance from a point to its nearest center.
pub fn fill_distance<P: AsRef<[f64]>, C: AsRef<[f64]>>(points: &[P], centers: &[C]) -> f64 {
    points
        .iter()
        .map(|p| centers.iter().map(|c| dist2(p.as_ref(), c.as_ref())).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
        .sqrt()
}

/// Normalized Gaussian memberships `exp(−‖x − c_i‖²) / Σ_k exp(−‖x − c_k‖²)`.
pub fn rbf_membership<C: AsRef<[f64]>>(x: &[f64], centers: &[C]) -> Vec<f64> {
    let d2: Vec<f64> = centers.iter().map(|c| dist2(x, c.as_ref())).collect();
    let shift = d2.iter().copied().fold(f64::INFINITY, f64::min);
    let mut phi: Vec<f64> = d2.iter().map(|d| (shift - d).exp()).collect();
    let total: f64 = phi.iter().sum();
    phi.iter_mut().for_each(|v| *v /= total);
    phi
}

/// `p_ij = Σ_k Φ_i(x_k) Φ_j(x_{k+lag}) / Σ_k Φ_i(x_k)` over `k < N − lag`.
pub fn hmc_transition_matrix<P: AsRef<[f64]>, C: AsRef<[f64]>>(
    points: &[P],
    centers: &[C],
    lag: usize,
) -> Result<TransitionMatrix, GenError> {
    if lag == 0 || points.len() <= lag {
        return Err(GenError::InvalidParameter(format!("lag {lag} needs more than {} points", points.len())));
    }
    let n = centers.len();
    let phi: Vec<Vec<f64>> = points.iter().map(|p| rbf_membership(p.as_ref(), centers)).collect();
    let mut num = vec![0.0; n * n];
    let mut den = vec![0.0; n];
    for k in 0..points.len() - lag {
        let (a, b) = (&phi[k], &phi[k + lag]);
        for i in 0..n {
            den[i] += a[i];
            let row = &mut num[i * n..(i + 1) * n];
            for (r, &bj) in row.iter_mut().zip(b) {
                *r += a[i] * bj;
            }
        }
    }
    for i in 0..n {
        if den[i] < 1e-300 {
            return Err(GenError::DegenerateRow(i));
        }
        num[i * n..(i + 1) * n].iter_mut().for_each(|v| *v /= den[i]);
    }
    Ok(TransitionMatrix::from_flat(n, num)?)
}
