//! Two-dimensional energy landscapes sampled by Metropolis Monte Carlo with a
//! drift that cycles through the landscape's minima.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::binning::{hmc_transition_matrix, select_bin_centers};
use super::GenError;
use crate::markov::TransitionMatrix;

const XS: f64 = 0.5;
const YS: f64 = 0.866_025_403_784_438_6; // 0.5·√3

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Potential {
    Omega3,
    Omega4,
    Omega6,
}

fn well(x: f64, y: f64, cx: f64, cy: f64) -> f64 {
    (-(x - cx).powi(2) - (y - cy).powi(2)).exp()
}

impl Potential {
    pub fn energy(self, p: Point) -> f64 {
        let [x, y] = p;
        let (hill, wells) = match self {
            Potential::Omega3 => (6.0, self.wells()),
            Potential::Omega4 | Potential::Omega6 => (4.0, self.wells()),
        };
        hill * (-3.0 * (x * x + y * y)).exp() - wells.iter().map(|c| 8.0 * well(x, y, c[0], c[1])).sum::<f64>()
    }

    /// Centers of the Gaussian wells in the order they appear in the formula.
    pub fn wells(self) -> Vec<Point> {
        match self {
            Potential::Omega3 => vec![[XS, -YS], [-XS, -YS], [0.0, 1.0]],
            Potential::Omega4 => vec![[0.0, 1.5], [1.0, 0.0], [-1.0, 0.0], [0.0, -1.5]],
            Potential::Omega6 => vec![
                [2.0 * XS, -2.0 * YS],
                [-2.0 * XS, -2.0 * YS],
                [-2.0 * XS, 2.0 * YS],
                [2.0 * XS, 2.0 * YS],
                [-2.0, 1.0],
                [2.0, 0.0],
            ],
        }
    }

    /// Wells in clockwise angular order starting at the first listed one.
    /// This is the order the drift visits them.
    pub fn drift_cycle(self) -> Vec<Point> {
        let wells = self.wells();
        let a0 = wells[0][1].atan2(wells[0][0]);
        let mut order: Vec<(f64, Point)> = wells
            .iter()
            .map(|w| {
                let clockwise = (a0 - w[1].atan2(w[0])).rem_euclid(std::f64::consts::TAU);
                (clockwise, *w)
            })
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        order.into_iter().map(|(_, w)| w).collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            Potential::Omega3 => "omega3",
            Potential::Omega4 => "omega4",
            Potential::Omega6 => "omega6",
        }
    }
}

/// Drift toward a cyclically advancing target.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftState {
    pub targets: Vec<Point>,
    pub target: usize,
    pub magnitude: f64,
    pub capture_radius: f64,
}

impl DriftState {
    pub fn new(targets: Vec<Point>, magnitude: f64) -> Self {
        Self { targets, target: 0, magnitude, capture_radius: 0.5 }
    }

    /// Advances the target when `pos` lies within the capture disk of the
    /// current one, then returns the drift vector aimed at the target.
    pub fn update(&mut self, pos: Point) -> Point {
        if self.targets.is_empty() || self.magnitude == 0.0 {
            return [0.0, 0.0];
        }
        if dist(pos, self.targets[self.target]) < self.capture_radius {
            self.target = (self.target + 1) % self.targets.len();
        }
        let t = self.targets[self.target];
        let v = [t[0] - pos[0], t[1] - pos[1]];
        let norm = v[0].hypot(v[1]);
        if norm == 0.0 {
            [0.0, 0.0]
        } else {
            [self.magnitude * v[0] / norm, self.magnitude * v[1] / norm]
        }
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmcParams {
    pub beta: f64,
    pub steps: usize,
    pub drift: f64,
    pub noise_std: f64,
}

impl Default for HmcParams {
    fn default() -> Self {
        Self { beta: 0.5, steps: 10_000, drift: 0.1, noise_std: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<Point>,
    pub seed: u64,
    pub params: HmcParams,
    pub accepted: usize,
    pub uphill_proposed: usize,
    pub uphill_accepted: usize,
}

impl Trajectory {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / (self.points.len().saturating_sub(1)).max(1) as f64
    }
}

/// Metropolis sampling with drift, starting at `start`. The drift is re-aimed
/// after every accepted move.
pub fn hmc_with_drift<E: Fn(Point) -> f64>(
    energy: E,
    targets: Vec<Point>,
    start: Point,
    params: &HmcParams,
    seed: u64,
) -> Result<Trajectory, GenError> {
    if !(params.beta > 0.0) || params.steps < 2 || !(params.noise_std > 0.0) || !(params.drift >= 0.0) {
        return Err(GenError::InvalidParameter(format!(
            "need beta > 0, steps >= 2, noise_std > 0, drift >= 0; got {params:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, params.noise_std).expect("positive std");
    let mut drift = DriftState::new(targets, params.drift);
    let mut x = start;
    let mut e = energy(x);
    let mut d = drift.update(x);
    let mut points = Vec::with_capacity(params.steps);
    points.push(x);
    let (mut accepted, mut uphill_proposed, mut uphill_accepted) = (0, 0, 0);
    for _ in 1..params.steps {
        let proposal = [x[0] + noise.sample(&mut rng) + d[0], x[1] + noise.sample(&mut rng) + d[1]];
        let e_new = energy(proposal);
        let u: f64 = rng.random();
        let uphill = e_new > e;
        uphill_proposed += usize::from(uphill);
        if u <= (-params.beta * (e_new - e)).exp() {
            x = proposal;
            e = e_new;
            accepted += 1;
            uphill_accepted += usize::from(uphill);
            d = drift.update(x);
        }
        points.push(x);
    }
    Ok(Trajectory { points, seed, params: params.clone(), accepted, uphill_proposed, uphill_accepted })
}

/// A sampled landscape binned into a transition matrix.
#[derive(Debug, Clone)]
pub struct HmcInstance {
    pub trajectory: Trajectory,
    pub centers: Vec<Point>,
    pub transition: TransitionMatrix,
}

/// Samples `potential` starting in its first well and bins the trajectory
/// into `bins` centers with lag one.
pub fn hmc_instance(potential: Potential, params: &HmcParams, bins: usize, seed: u64) -> Result<HmcInstance, GenError> {
    let cycle = potential.drift_cycle();
    let start = cycle[0];
    let trajectory = hmc_with_drift(|p| potential.energy(p), cycle, start, params, seed)?;
    let centers = select_bin_centers(&trajectory.points, bins)?;
    let transition = hmc_transition_matrix(&trajectory.points, &centers, 1)?;
    Ok(HmcInstance { trajectory, centers, transition })
}

/// Index of the well closest to `p`.
pub fn nearest_well(potential: Potential, p: Point) -> usize {
    let wells = potential.wells();
    (0..wells.len()).min_by(|&a, &b| dist(p, wells[a]).total_cmp(&dist(p, wells[b]))).expect("wells")
}
