//! The three-gene repressilator, a fixed-step RK4 integrator and Halton
//! starting points.

use serde::{Deserialize, Serialize};

use super::GenError;
use crate::markov::TransitionMatrix;

pub type State = [f64; 6];

/// Kernel width of the start/end transition kernel.
pub const KERNEL_RATE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepressilatorParams {
    /// Maximal transcription rate.
    pub v: f64,
    /// Protein to mRNA decay rate ratio.
    pub beta: f64,
    /// Leaky transcription.
    pub v0: f64,
    /// Hill coefficient.
    pub h: f64,
}

impl Default for RepressilatorParams {
    fn default() -> Self {
        Self { v: 298.2, beta: 0.2, v0: 0.03, h: 2.0 }
    }
}

/// Derivative of `(m_A, p_A, m_B, p_B, m_C, p_C)`. Gene A is repressed by
/// protein C, B by A and C by B.
pub fn repressilator_rhs(s: &State, par: &RepressilatorParams) -> State {
    let hill = |p: f64| par.v / (1.0 + p.powf(par.h)) + par.v0;
    let [ma, pa, mb, pb, mc, pc] = *s;
    [
        -ma + hill(pc),
        -par.beta * (pa - ma),
        -mb + hill(pa),
        -par.beta * (pb - mb),
        -mc + hill(pb),
        -par.beta * (pc - mc),
    ]
}

/// Classical RK4 with step `dt`; the last step is shortened to end at `t_end`.
pub fn integrate<const N: usize, F: Fn(&[f64; N]) -> [f64; N]>(
    rhs: F,
    start: [f64; N],
    t_end: f64,
    dt: f64,
) -> Result<[f64; N], GenError> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(GenError::InvalidParameter(format!("need dt > 0 and t_end >= 0, got dt={dt}, t_end={t_end}")));
    }
    let axpy = |y: &[f64; N], k: &[f64; N], h: f64| -> [f64; N] { std::array::from_fn(|i| y[i] + h * k[i]) };
    let steps = (t_end / dt).round().max(0.0) as usize;
    let steps = if (steps as f64) * dt > t_end * (1.0 + 1e-12) { steps - 1 } else { steps };
    let mut y = start;
    let mut t = 0.0;
    let step = |y: &mut [f64; N], h: f64| {
        let k1 = rhs(y);
        let k2 = rhs(&axpy(y, &k1, h / 2.0));
        let k3 = rhs(&axpy(y, &k2, h / 2.0));
        let k4 = rhs(&axpy(y, &k3, h));
        for i in 0..N {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    };
    for _ in 0..steps {
        step(&mut y, dt);
        t += dt;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(GenError::NonFiniteState(t));
        }
    }
    let rest = t_end - steps as f64 * dt;
    if rest > 1e-12 * dt.max(t_end) {
        step(&mut y, rest);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(GenError::NonFiniteState(t_end));
        }
    }
    Ok(y)
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut c = 2u64;
    while primes.len() < count {
        if primes.iter().take_while(|&&p| p * p <= c).all(|&p| !c.is_multiple_of(p)) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut out = 0.0;
    let mut f = inv;
    while i > 0 {
        out += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    out
}

/// Halton points 1..=count on the first `dim` primes, scaled to `[lo, hi]`.
pub fn low_discrepancy_points(count: usize, dim: usize, lo: f64, hi: f64) -> Result<Vec<Vec<f64>>, GenError> {
    if count == 0 || dim == 0 || !(lo < hi) {
        return Err(GenError::InvalidParameter(format!("count={count}, dim={dim}, range [{lo}, {hi}]")));
    }
    let primes = first_primes(dim);
    Ok((1..=count as u64)
        .map(|i| primes.iter().map(|&b| lo + (hi - lo) * radical_inverse(i, b)).collect())
        .collect())
}

/// `p_ij ∝ exp(−0.2 ‖start_i − end_j‖)`, rows normalized.
pub fn repressilator_transition_matrix<S: AsRef<[f64]>>(starts: &[S], ends: &[S]) -> Result<TransitionMatrix, GenError> {
    if starts.len() != ends.len() {
        return Err(GenError::DimensionMismatch { expected: starts.len(), got: ends.len() });
    }
    let n = starts.len();
    let mut data = Vec::with_capacity(n * n);
    for s in starts {
        let d: Vec<f64> = ends
            .iter()
            .map(|e| s.as_ref().iter().zip(e.as_ref()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .collect();
        let dmin = d.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = d.iter().map(|x| (-KERNEL_RATE * (x - dmin)).exp()).collect();
        let total: f64 = w.iter().sum();
        data.extend(w.iter().map(|x| x / total));
    }
    Ok(TransitionMatrix::from_flat(n, data)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepressilatorSetup {
    pub starts: usize,
    pub lo: f64,
    pub hi: f64,
    pub t_end: f64,
    pub dt: f64,
    pub params: RepressilatorParams,
}

impl Default for RepressilatorSetup {
    fn default() -> Self {
        Self { starts: 200, lo: 0.0, hi: 20.0, t_end: 1.5, dt: 1e-3, params: RepressilatorParams::default() }
    }
}

#[derive(Debug, Clone)]
pub struct RepressilatorInstance {
    pub starts: Vec<State>,
    pub ends: Vec<State>,
    pub transition: TransitionMatrix,
}

pub fn repressilator_instance(setup: &RepressilatorSetup) -> Result<RepressilatorInstance, GenError> {
    let starts: Vec<State> = low_discrepancy_points(setup.starts, 6, setup.lo, setup.hi)?
        .into_iter()
        .map(|p| std::array::from_fn(|i| p[i]))
        .collect();
    let ends = starts
        .iter()
        .map(|s| integrate(|y| repressilator_rhs(y, &setup.params), *s, setup.t_end, setup.dt))
        .collect::<Result<Vec<_>, _>>()?;
    let transition = repressilator_transition_matrix(&starts, &ends)?;
    Ok(RepressilatorInstance { starts, ends, transition })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protein_equations_vanish_on_diagonal() {
        let d = repressilator_rhs(&[1.0, 1.0, 2.0, 2.0, 3.0, 3.0], &RepressilatorParams::default());
        assert_eq!([d[1], d[3], d[5]], [0.0, 0.0, 0.0]);
        let d = repressilator_rhs(&[1.0, 0.0, 0.0, 0.0, 0.0, 1e9], &RepressilatorParams::default());
        assert!((d[0] - (-1.0 + 0.03)).abs() < 1e-12);
    }

    #[test]
    fn exponential_decay() {
        let y = integrate(|y: &[f64; 1]| [-y[0]], [1.0], 1.0, 1e-3).unwrap();
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-9);
        let z = integrate(|_: &[f64; 2]| [0.0, 0.0], [3.0, 4.0], 2.5, 0.1).unwrap();
        assert_eq!(z, [3.0, 4.0]);
        // shortened final step
        let y = integrate(|y: &[f64; 1]| [-y[0]], [1.0], 1.0, 0.3).unwrap();
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn blow_up_is_reported() {
        let r = integrate(|y: &[f64; 1]| [y[0] * y[0]], [1.0], 2.0, 0.01);
        assert!(matches!(r, Err(GenError::NonFiniteState(_))));
    }

    #[test]
    fn halton_first_point() {
        let p = low_discrepancy_points(1, 2, 0.0, 1.0).unwrap();
        assert_eq!(p, vec![vec![0.5, 1.0 / 3.0]]);
        let p = low_discrepancy_points(3, 6, 2.0, 4.0).unwrap();
        assert!(p.iter().flatten().all(|&v| (2.0..=4.0).contains(&v)));
        assert_eq!(first_primes(6), vec![2, 3, 5, 7, 11, 13]);
    }

    #[test]
    fn kernel_rows() {
        let one = repressilator_transition_matrix(&[vec![1.0]], &[vec![5.0]]).unwrap();
        assert_eq!(one.get(0, 0), 1.0);
        let s = [vec![0.0, 0.0], vec![0.0, 1.0]];
        let e = [vec![1.0, 0.5], vec![-1.0, 0.5]];
        let p = repressilator_transition_matrix(&s, &e).unwrap();
        assert!((p.get(0, 0) - 0.5).abs() < 1e-15 && (p.get(1, 1) - 0.5).abs() < 1e-15);
    }
}
