mod common;

use common::STATIONARY_TOL;
use cyclust_core::gen::binning::{fill_distance, hmc_transition_matrix, rbf_membership, select_bin_centers};
use cyclust_core::gen::hmc::{hmc_instance, hmc_with_drift, nearest_well, HmcParams, Potential};
use cyclust_core::gen::multiway::{multiway_cut_to_instance, random_multiway_cut, Edge, MultiwayCutInstance};
use cyclust_core::gen::repressilator::{
    integrate, low_discrepancy_points, repressilator_instance, repressilator_rhs, repressilator_transition_matrix,
    RepressilatorParams, RepressilatorSetup,
};
use cyclust_core::gen::triangle::triangle_fixture;
use cyclust_core::markov::{flow_matrix, stationary_distribution, DEFAULT_STATIONARY_MAX_ITER};
use cyclust_core::solver::brute_force;
use cyclust_core::{objective, CycleClustering};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rows_sum_to_one(p: &cyclust_core::TransitionMatrix) -> bool {
    (0..p.n()).all(|i| (p.row(i).iter().sum::<f64>() - 1.0).abs() <= 1e-9)
}

#[test]
fn cold_sampler_rejects_uphill_moves() {
    let params = HmcParams { beta: 1e6, drift: 0.1, steps: 10_000, ..HmcParams::default() };
    let pot = Potential::Omega3;
    let t = hmc_with_drift(|p| pot.energy(p), pot.drift_cycle(), pot.drift_cycle()[0], &params, 9).unwrap();
    assert!(t.uphill_proposed > 1000);
    assert!((t.uphill_accepted as f64) / (t.uphill_proposed as f64) < 0.001);
}

#[test]
fn occupancy_at_beta_four_is_pinned() {
    let pot = Potential::Omega3;
    let params = HmcParams { beta: 4.0, drift: 0.1, steps: 10_000, ..HmcParams::default() };
    let t = hmc_with_drift(|p| pot.energy(p), pot.drift_cycle(), pot.drift_cycle()[0], &params, 42).unwrap();
    let mut counts = [0usize; 3];
    for p in &t.points {
        counts[nearest_well(pot, *p)] += 1;
    }
    let share: Vec<f64> = counts.iter().map(|&c| c as f64 / t.points.len() as f64).collect();
    assert!(share[2] < 0.1);
    assert_eq!(counts, PINNED_BETA4_COUNTS);
}

// The walk stays split between the two merged lower wells; the upper well
// is never reached at this temperature.
const PINNED_BETA4_COUNTS: [usize; 3] = [4899, 5101, 0];

#[test]
fn farthest_point_is_a_two_approximation() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..20 {
        let count = 6 + trial % 7;
        let pts: Vec<[f64; 2]> = (0..count).map(|_| [rng.random::<f64>() * 10.0, rng.random::<f64>() * 10.0]).collect();
        for k in 1..=3 {
            let greedy = fill_distance(&pts, &select_bin_centers(&pts, k).unwrap());
            let mut best = f64::INFINITY;
            for mask in 0u32..(1 << count) {
                if mask.count_ones() as usize == k {
                    let subset: Vec<[f64; 2]> = (0..count).filter(|i| mask >> i & 1 == 1).map(|i| pts[i]).collect();
                    best = best.min(fill_distance(&pts, &subset));
                }
            }
            assert!(greedy <= 2.0 * best + 1e-12, "trial {trial} k {k}: {greedy} vs {best}");
        }
    }
}

#[test]
fn all_points_as_centers_cover_exactly() {
    let pts: Vec<[f64; 2]> = (0..7).map(|i| [i as f64, (i * i) as f64]).collect();
    let c = select_bin_centers(&pts, 7).unwrap();
    assert_eq!(fill_distance(&pts, &c), 0.0);
    assert!(select_bin_centers(&pts, 8).is_err());
}

#[test]
fn membership_matches_direct_formula() {
    let centers: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.5], [-0.3, 2.0]];
    let x = [0.4f64, 0.7];
    let raw: Vec<f64> = centers.iter().map(|c| (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2))).exp()).collect();
    let s: f64 = raw.iter().sum();
    let phi = rbf_membership(&x, &centers);
    for (a, b) in phi.iter().zip(&raw) {
        assert!((a - b / s).abs() < 1e-15);
    }
    assert!((phi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn binned_transitions_match_direct_sums() {
    let centers = [[0.0, 0.0], [1.0, 0.0]];
    let traj = [[0.1, 0.0], [0.8, 0.1], [0.5, -0.2]];
    let p = hmc_transition_matrix(&traj, &centers, 1).unwrap();
    let phi: Vec<Vec<f64>> = traj.iter().map(|x| rbf_membership(x, &centers)).collect();
    for i in 0..2 {
        let den = phi[0][i] + phi[1][i];
        for j in 0..2 {
            let num = phi[0][i] * phi[1][j] + phi[1][i] * phi[2][j];
            assert!((p.get(i, j) - num / den).abs() < 1e-14);
        }
    }
}

#[test]
fn generated_hmc_instances_are_stochastic() {
    let params = HmcParams { steps: 3000, ..HmcParams::default() };
    for pot in [Potential::Omega3, Potential::Omega4, Potential::Omega6] {
        let inst = hmc_instance(pot, &params, 20, 1).unwrap();
        assert_eq!(inst.transition.n(), 20);
        assert!(rows_sum_to_one(&inst.transition));
        let again = hmc_instance(pot, &params, 20, 1).unwrap();
        assert_eq!(inst.transition, again.transition);
    }
}

#[test]
fn symmetric_fixed_point_has_zero_derivative() {
    let par = RepressilatorParams::default();
    // s = v/(1+s^h) + v0 has a single root; the left side minus the right is increasing
    let g = |s: f64| s - par.v / (1.0 + s.powf(par.h)) - par.v0;
    let (mut lo, mut hi) = (0.0, par.v + par.v0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let d = repressilator_rhs(&[s; 6], &par);
    assert!(d.iter().all(|v| v.abs() < 1e-9), "{d:?}");
}

#[test]
fn repressilator_endpoint_converges_at_fourth_order() {
    let par = RepressilatorParams::default();
    let start = [3.0, 8.0, 12.0, 1.0, 5.0, 15.0];
    let end = |dt: f64| integrate(|y| repressilator_rhs(y, &par), start, 1.5, dt).unwrap();
    let diff = |a: [f64; 6], b: [f64; 6]| a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let (a, b, c) = (end(0.02), end(0.01), end(0.005));
    let ratio = diff(a, b) / diff(b, c);
    assert!((8.0..=32.0).contains(&ratio), "ratio {ratio}");
}

/// Largest deviation between the empirical and exact measure of boxes
/// `[lo, corner)` over a fixed set of random corners.
fn box_discrepancy(points: &[Vec<f64>], lo: f64, hi: f64, corners: &[Vec<f64>]) -> f64 {
    corners
        .iter()
        .map(|c| {
            let vol: f64 = c.iter().map(|v| (v - lo) / (hi - lo)).product();
            let inside = points.iter().filter(|p| p.iter().zip(c).all(|(x, y)| x < y)).count();
            (inside as f64 / points.len() as f64 - vol).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn halton_points_beat_random_points() {
    let halton = low_discrepancy_points(200, 6, 0.0, 20.0).unwrap();
    assert!(halton.iter().flatten().all(|v| (0.0..=20.0).contains(v)));
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let random: Vec<Vec<f64>> = (0..200).map(|_| (0..6).map(|_| rng.random::<f64>() * 20.0).collect()).collect();
    let corners: Vec<Vec<f64>> = (0..2000).map(|_| (0..6).map(|_| rng.random::<f64>() * 20.0).collect()).collect();
    let dh = box_discrepancy(&halton, 0.0, 20.0, &corners);
    let dr = box_discrepancy(&random, 0.0, 20.0, &corners);
    assert!(dh < dr, "halton {dh} random {dr}");
}

#[test]
fn kernel_matrix_examples() {
    let one = repressilator_transition_matrix(&[[1.0, 2.0]], &[[5.0, 5.0]]).unwrap();
    assert_eq!(one.get(0, 0), 1.0);
    let starts = [[0.0, 0.0], [0.0, 1.0]];
    let ends = [[1.0, 0.0], [-1.0, 0.0]];
    let p = repressilator_transition_matrix(&starts, &ends).unwrap();
    assert!((p.get(0, 0) - 0.5).abs() < 1e-15 && (p.get(1, 1) - 0.5).abs() < 1e-15);
    let starts = [[0.0, 0.0], [3.0, 1.0], [1.0, 4.0]];
    let ends = [[1.0, 1.0], [2.0, 0.0], [0.0, 5.0]];
    let p = repressilator_transition_matrix(&starts, &ends).unwrap();
    for i in 0..3 {
        let k: Vec<f64> = ends
            .iter()
            .map(|e| (-0.2 * ((starts[i][0] - e[0]).powi(2) + (starts[i][1] - e[1]).powi(2)).sqrt()).exp())
            .collect();
        let s: f64 = k.iter().sum();
        for j in 0..3 {
            assert!((p.get(i, j) - k[j] / s).abs() < 1e-15);
        }
    }
    assert!(repressilator_transition_matrix(&starts, &ends[..2]).is_err());
}

#[test]
fn repressilator_instance_is_stochastic_and_deterministic() {
    let setup = RepressilatorSetup { starts: 30, ..RepressilatorSetup::default() };
    let a = repressilator_instance(&setup).unwrap();
    assert!(rows_sum_to_one(&a.transition));
    assert_eq!(a.transition, repressilator_instance(&setup).unwrap().transition);
}

#[test]
fn triangle_flow_ignores_satellite_placement() {
    let w = triangle_fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let mut a = vec![0, 1, 2];
        a.extend((0..6).map(|_| rng.random_range(0..3)));
        let c = CycleClustering::new(3, a).unwrap();
        assert!((objective(&w, &c, 0.001).unwrap().flow_part - 0.3 / 9.0).abs() < 1e-15);
    }
    let rs = w.row_sums();
    let cs = w.col_sums();
    assert!(rs.iter().zip(&cs).all(|(a, b)| a == b));
    let best = brute_force(&w, 3, 0.001).unwrap();
    assert_eq!(best.clustering.to_one_based(), vec![1, 2, 3, 1, 1, 2, 2, 3, 3]);
    assert!((best.objective.flow_part - 0.3 / 9.0).abs() < 1e-15);
}

fn exhaustive_min_cut(mc: &MultiwayCutInstance) -> f64 {
    let free: Vec<usize> = (0..mc.vertices).filter(|v| !mc.terminals.contains(v)).collect();
    let mut labels = vec![0; mc.vertices];
    for (k, &t) in mc.terminals.iter().enumerate() {
        labels[t] = k;
    }
    (0..3usize.pow(free.len() as u32))
        .map(|code| {
            let mut rest = code;
            for &v in &free {
                labels[v] = rest % 3;
                rest /= 3;
            }
            mc.cut_weight(&labels)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn terminals_only_reduction() {
    let mc = MultiwayCutInstance { vertices: 3, edges: vec![], terminals: vec![0, 1, 2] };
    let r = multiway_cut_to_instance(&mc, 0.001).unwrap();
    let w = flow_matrix(&r.transition, &r.stationary).unwrap();
    let best = brute_force(&w, 3, 0.001).unwrap();
    assert!((best.objective.flow_part - 3.0 * r.big_m / r.arc_total).abs() < 1e-12);
}

#[test]
fn star_reduction_keeps_heavy_edge() {
    let mc = MultiwayCutInstance {
        vertices: 4,
        edges: vec![
            Edge { u: 0, v: 3, weight: 3.0 },
            Edge { u: 1, v: 3, weight: 1.0 },
            Edge { u: 2, v: 3, weight: 1.0 },
        ],
        terminals: vec![0, 1, 2],
    };
    assert_eq!(exhaustive_min_cut(&mc), 2.0);
    let r = multiway_cut_to_instance(&mc, 0.001).unwrap();
    let w = flow_matrix(&r.transition, &r.stationary).unwrap();
    let best = brute_force(&w, 3, 0.001).unwrap();
    assert_eq!(best.clustering.label(3), best.clustering.label(0));
}

#[test]
fn reduction_invariants_on_random_graphs() {
    for seed in 0..10 {
        let mc = random_multiway_cut(7, 3, 0.5, seed);
        let r = multiway_cut_to_instance(&mc, 0.001).unwrap();
        assert!(rows_sum_to_one(&r.transition));
        assert!(r.transition.stationarity_residual(r.stationary.as_slice()) <= 1e-10);
        let w = flow_matrix(&r.transition, &r.stationary).unwrap();
        let t = &mc.terminals;
        let consecutive = |u: usize, v: usize| (0..3).any(|i| (t[i], t[(i + 1) % 3]) == (u, v) || (t[i], t[(i + 1) % 3]) == (v, u));
        for u in 0..7 {
            for v in 0..7 {
                if !consecutive(u, v) {
                    assert!((w.get(u, v) - w.get(v, u)).abs() <= 1e-12);
                }
            }
        }
        // cut identity over every clustering that separates the terminals
        let free: Vec<usize> = (0..7).filter(|v| !t.contains(v)).collect();
        for code in 0..3usize.pow(free.len() as u32) {
            let mut labels = vec![0; 7];
            for (k, &v) in t.iter().enumerate() {
                labels[v] = k;
            }
            let mut rest = code;
            for &v in &free {
                labels[v] = rest % 3;
                rest /= 3;
            }
            let c = CycleClustering::new(3, labels.clone()).unwrap();
            let o = objective(&w, &c, 0.001).unwrap();
            let expected = (0.001 / r.arc_total) * (mc.total_weight() - mc.cut_weight(&labels));
            assert!((0.001 * o.coherence_part - expected).abs() <= 1e-10);
        }
    }
}

#[test]
fn stationary_tolerance_used_by_tests_is_reachable() {
    let inst = repressilator_instance(&RepressilatorSetup { starts: 40, ..RepressilatorSetup::default() }).unwrap();
    let pi = stationary_distribution(&inst.transition, STATIONARY_TOL, DEFAULT_STATIONARY_MAX_ITER).unwrap();
    assert!(inst.transition.stationarity_residual(pi.as_slice()) <= STATIONARY_TOL);
}
