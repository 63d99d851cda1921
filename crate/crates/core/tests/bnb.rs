mod common;

use common::random_flow;
use cyclust_core::gen::triangle::{triangle_fixture, triangle_natural_clusters};
use cyclust_core::lp::BoundOverride;
use cyclust_core::solver::{
    branch_and_bound, branch_and_bound_with, brute_force, BnbConfig, HeuristicConfig, NodeSelection, SolveStatus,
};
use cyclust_core::{build_mip, CycleClustering};

#[test]
fn triangle_is_solved_to_optimality() {
    let w = triangle_fixture();
    let mip = build_mip(&w, 3, 0.001).unwrap();
    let r = branch_and_bound(&mip, &w, &BnbConfig::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    let obj = r.objective.unwrap();
    assert!((obj.flow_part - 0.3 / 9.0).abs() <= 1e-9, "{}", obj.flow_part);
    let zero_based: Vec<Vec<usize>> =
        triangle_natural_clusters().iter().map(|c| c.iter().map(|b| b - 1).collect()).collect();
    let expected = CycleClustering::from_clusters(9, &zero_based).unwrap();
    assert!(r.incumbent.unwrap().same_up_to_rotation(&expected));
    assert!(r.gap <= 1e-6);
}

#[test]
fn matches_brute_force_on_random_instances() {
    for seed in 0..15u64 {
        let n = 5 + (seed as usize % 4);
        let w = random_flow(n, 0.3, 100 + seed);
        let mip = build_mip(&w, 3, 0.001).unwrap();
        let exact = brute_force(&w, 3, 0.001).unwrap();
        for node_selection in [NodeSelection::BestBound, NodeSelection::Dfs] {
            let config = BnbConfig { node_selection, ..BnbConfig::default() };
            let r = branch_and_bound(&mip, &w, &config).unwrap();
            assert_eq!(r.status, SolveStatus::Optimal, "seed {seed}");
            assert!((r.primal - exact.objective.total).abs() <= 1e-9, "seed {seed}: {} vs {}", r.primal, exact.objective.total);
            assert!(r.gap <= 1e-6);
        }
    }
}

#[test]
fn without_heuristics_the_tree_alone_finds_the_optimum() {
    let off = HeuristicConfig { greedy: false, rounding: false, exchange: false };
    for seed in 0..5u64 {
        let w = random_flow(6, 0.2, 7 + seed);
        let mip = build_mip(&w, 3, 0.001).unwrap();
        let exact = brute_force(&w, 3, 0.001).unwrap();
        let r = branch_and_bound(&mip, &w, &BnbConfig { heuristics: off, ..BnbConfig::default() }).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.primal - exact.objective.total).abs() <= 1e-9);
    }
}

#[test]
fn trace_is_monotone() {
    let w = random_flow(8, 0.3, 42);
    let mip = build_mip(&w, 3, 0.001).unwrap();
    let r = branch_and_bound(&mip, &w, &BnbConfig::default()).unwrap();
    assert!(!r.trace.is_empty());
    for p in r.trace.windows(2) {
        assert!(p[1].dual_bound <= p[0].dual_bound + 1e-12);
        if let (Some(a), Some(b)) = (p[0].primal, p[1].primal) {
            assert!(b >= a);
        }
        assert!(p[1].nodes >= p[0].nodes);
    }
    for p in &r.trace {
        if let Some(v) = p.primal {
            assert!(p.dual_bound >= v - 1e-9);
        }
    }
}

#[test]
fn contradictory_overrides_are_infeasible() {
    let w = random_flow(5, 0.0, 1);
    let mip = build_mip(&w, 3, 0.001).unwrap();
    // bin 1 forced out of every cluster
    let o: Vec<_> = (0..3).map(|k| BoundOverride { var: mip.x_index(1, k), lower: 0.0, upper: 0.0 }).collect();
    let r = branch_and_bound_with(&mip, &w, &BnbConfig::default(), &o).unwrap();
    assert_eq!(r.status, SolveStatus::Infeasible);
    assert!(r.incumbent.is_none());
}

#[test]
fn node_limit_reports_valid_bounds() {
    let w = random_flow(9, 0.1, 77);
    let mip = build_mip(&w, 3, 0.001).unwrap();
    let off = HeuristicConfig { greedy: false, rounding: false, exchange: false };
    let r = branch_and_bound(&mip, &w, &BnbConfig { node_limit: Some(3), heuristics: off, ..BnbConfig::default() }).unwrap();
    let exact = brute_force(&w, 3, 0.001).unwrap();
    assert!(r.dual_bound >= exact.objective.total - 1e-9);
    if r.status != SolveStatus::Optimal {
        assert_eq!(r.status, SolveStatus::NodeLimit);
    }
}

#[test]
fn solves_are_deterministic() {
    let w = random_flow(8, 0.2, 5);
    let mip = build_mip(&w, 3, 0.001).unwrap();
    let a = branch_and_bound(&mip, &w, &BnbConfig::default()).unwrap();
    let b = branch_and_bound(&mip, &w, &BnbConfig::default()).unwrap();
    assert_eq!(a.incumbent, b.incumbent);
    assert_eq!(a.nodes, b.nodes);
    assert_eq!(a.lp_iterations, b.lp_iterations);
}

#[test]
fn invalid_config_is_rejected() {
    let w = random_flow(5, 0.0, 1);
    let mip = build_mip(&w, 3, 0.001).unwrap();
    assert!(branch_and_bound(&mip, &w, &BnbConfig { gap_tol: -1.0, ..BnbConfig::default() }).is_err());
}
