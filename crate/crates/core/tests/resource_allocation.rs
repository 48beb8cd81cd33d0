mod common;

use common::*;
use proptest::prelude::*;
use saddle_h2::formulas;
use saddle_h2::resource_allocation::{ra_formula, table1_report, RaTimeConstants};
use saddle_h2::{DisturbanceConfig, Error, OrientedGraph, RaFormulation, ResourceAllocationProblem};

fn problem(q: Vec<f64>, graph: OrientedGraph, tau_nu: f64) -> ResourceAllocationProblem {
    let n = q.len();
    let tau = RaTimeConstants {
        tau_nu,
        ..RaTimeConstants::default()
    };
    ResourceAllocationProblem::new(q, vec![0.0; n], vec![0.0; n], graph, tau, DisturbanceConfig::new(0.0, 1.0).unwrap())
        .unwrap()
}

fn h2(ra: &ResourceAllocationProblem, f: RaFormulation, rho: f64) -> f64 {
    h2_oracle(&ra.build(f, rho).unwrap())
}

#[test]
fn all_formulations_agree_without_augmentation() {
    let mut r = rng(61);
    for n in 2..=6 {
        for heterogeneous in [false, true] {
            let q = if heterogeneous { uniform_vec(&mut r, n, 0.2, 30.0) } else { vec![2.0; n] };
            let ra = problem(q, OrientedGraph::line(n).unwrap(), 1.7);
            let target = n as f64 / (2.0 * 1.7);
            for f in RaFormulation::ALL {
                assert!((h2(&ra, f, 0.0) - target).abs() < 1e-9, "{f:?} n = {n}");
            }
        }
    }
}

#[test]
fn centralized_dual_ignores_rho() {
    let ra = problem(vec![1.0, 3.0, 2.0, 5.0], OrientedGraph::line(4).unwrap(), 1.0);
    for rho in [0.0, 1.0, 1e3] {
        assert!((h2(&ra, RaFormulation::CentDual, rho) - 2.0).abs() < 1e-12);
    }
}

#[test]
fn primal_formulations_blow_up_with_rho() {
    for n in [2, 4] {
        let ra = problem(vec![1.0; n], OrientedGraph::line(n).unwrap(), 1.0);
        for f in [RaFormulation::Cent, RaFormulation::Dist] {
            assert!(h2(&ra, f, 1e3) > 10.0 * h2(&ra, f, 0.0), "{f:?}");
        }
    }
}

#[test]
fn distributed_dual_tends_to_single_agent_value() {
    for n in [2, 4, 6] {
        for g in [OrientedGraph::line(n).unwrap(), OrientedGraph::complete(n).unwrap()] {
            let ra = problem(vec![1.0; n], g, 1.0);
            let v = h2(&ra, RaFormulation::DistDual, 1e4);
            assert!(rel_err(v, 0.5) < 0.02, "n = {n}: {v}");
        }
    }
}

#[test]
fn distributed_dual_matches_spectral_formula_on_paths() {
    for n in 3..=5 {
        let ra = problem(vec![1.3; n], OrientedGraph::line(n).unwrap(), 0.8);
        let spec = ra.graph().laplacian_spectrum();
        let mut prev = f64::INFINITY;
        for rho in [0.0, 0.1, 1.0, 10.0, 100.0] {
            let v = h2(&ra, RaFormulation::DistDual, rho);
            let f = formulas::h2sq_ra_dist_dual_uniform(1.3, 0.8, &spec, rho).unwrap();
            assert!(rel_err(v, f) < 1e-8);
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }
}

#[test]
fn centralized_matches_weighted_augmented_formula() {
    let ra = problem(vec![0.6; 5], OrientedGraph::star(5).unwrap(), 1.4);
    for rho in [0.0, 0.5, 7.0, 300.0] {
        let (f, exact) = ra_formula(&ra, RaFormulation::Cent, rho).unwrap();
        assert!(exact);
        assert!(rel_err(h2(&ra, RaFormulation::Cent, rho), f.unwrap()) < 1e-8);
    }
}

#[test]
fn better_connected_graphs_perform_better() {
    let n = 6;
    let base = problem(vec![1.0; n], OrientedGraph::line(n).unwrap(), 1.0);
    for rho in [0.5, 5.0, 50.0] {
        let line = h2(&base, RaFormulation::DistDual, rho);
        let ring = h2(&base.with_graph(OrientedGraph::ring(n).unwrap()).unwrap(), RaFormulation::DistDual, rho);
        let complete = h2(&base.with_graph(OrientedGraph::complete(n).unwrap()).unwrap(), RaFormulation::DistDual, rho);
        assert!(complete <= ring + 1e-12 && ring <= line + 1e-12, "{complete} {ring} {line}");
    }
}

#[test]
fn augmentation_helps_dual_and_hurts_primal() {
    let ra = problem(vec![4.0, 25.0], OrientedGraph::line(2).unwrap(), 1.0);
    let cent = h2(&ra, RaFormulation::Cent, 100.0);
    let dist_dual = h2(&ra, RaFormulation::DistDual, 100.0);
    assert!(cent > 1.0 && dist_dual < 1.0 && cent > dist_dual);
}

#[test]
fn distributed_primal_rejects_cycles() {
    let ra = problem(vec![1.0; 4], OrientedGraph::ring(4).unwrap(), 1.0);
    assert!(matches!(ra.build(RaFormulation::Dist, 1.0), Err(Error::Graph(_))));
    assert!(ra.build(RaFormulation::DistDual, 1.0).unwrap().is_hurwitz().unwrap());
}

#[test]
fn disconnected_graphs_are_rejected() {
    let g = OrientedGraph::new(4, vec![(0, 1), (2, 3)]).unwrap();
    assert!(ResourceAllocationProblem::uniform(4, 1.0, g).is_err());
}

#[test]
fn table1_report_reproduces_columns_and_trends() {
    let ra = problem(vec![1.0; 4], OrientedGraph::line(4).unwrap(), 1.0);
    let grid = [0.0, 0.1, 1.0, 10.0, 100.0, 1000.0];
    let report = table1_report(&ra, &grid).unwrap();
    assert_eq!(report.rows.len(), 4 * grid.len());
    assert!(report.standard_setting);
    for f in RaFormulation::ALL {
        let col = report.column(f);
        assert_eq!(col.iter().map(|r| r.rho).collect::<Vec<_>>(), grid);
        assert!((col[0].h2sq_numeric.unwrap() - 2.0).abs() < 1e-9);
        for row in col {
            if row.formula_applicable {
                assert!(rel_err(row.h2sq_numeric.unwrap(), row.h2sq_formula.unwrap()) < 1e-8, "{row:?}");
            }
        }
    }
    let trend = |f| report.trends.iter().find(|t| t.formulation == f).unwrap().clone();
    assert!(trend(RaFormulation::DistDual).nonincreasing);
    assert!(trend(RaFormulation::Cent).increasing_at_end);
    assert!(trend(RaFormulation::Dist).increasing_at_end);
    assert!(trend(RaFormulation::CentDual).nonincreasing && trend(RaFormulation::CentDual).nondecreasing);
    assert!(report.pretty().contains("RA_dist_dual"));
}

#[test]
fn table1_report_on_cycles_marks_distributed_primal_missing() {
    let ra = problem(vec![1.0; 5], OrientedGraph::ring(5).unwrap(), 1.0);
    let report = table1_report(&ra, &[0.0, 1.0]).unwrap();
    assert!(report.column(RaFormulation::Dist).iter().all(|r| r.h2sq_numeric.is_none() && r.note.is_some()));
    assert!(table1_report(&ra, &[]).is_err());
    assert!(table1_report(&ra, &[-1.0]).is_err());
}

#[test]
fn primal_noise_is_flagged_outside_standard_setting() {
    let g = OrientedGraph::line(3).unwrap();
    let ra = ResourceAllocationProblem::new(
        vec![1.0; 3],
        vec![0.0; 3],
        vec![0.0; 3],
        g,
        RaTimeConstants::default(),
        DisturbanceConfig::new(0.5, 1.0).unwrap(),
    )
    .unwrap();
    let report = table1_report(&ra, &[0.0]).unwrap();
    assert!(!report.standard_setting);
    assert!(report.pretty().contains("outside"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn equal_performance_at_zero_rho_for_random_trees(seed in any::<u64>(), n in 2usize..7) {
        let mut r = rng(seed);
        let q = uniform_vec(&mut r, n, 0.1, 10.0);
        let edges = (1..n).map(|i| (rand::Rng::random_range(&mut r, 0..i), i)).collect();
        let g = OrientedGraph::new(n, edges).unwrap();
        let tau_nu = rand::Rng::random_range(&mut r, 0.2..3.0);
        let ra = problem(q, g, tau_nu);
        let vals: Vec<f64> = RaFormulation::ALL.iter().map(|&f| h2(&ra, f, 0.0)).collect();
        for v in &vals {
            prop_assert!((v - vals[0]).abs() < 1e-9);
        }
    }
}
