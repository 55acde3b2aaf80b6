mod common;

use advrisk::configuration::is_feasible;
use advrisk::geometry::{enclosing_radius, within_budget, Metric};
use advrisk::search::solve_pool;
use advrisk::{
    certify_optimality, exhaustive_search, gencol_w2, genetic_search, CostModel, GencolParams, GeneticParams,
};
use common::{dense_lp, w2_columns, DeskInstance};
use proptest::prelude::*;

fn quick_genetic(n: usize, seed: u64) -> GeneticParams {
    GeneticParams { time_limit: 20.0, stagnation_generations: 30, seed, ..GeneticParams::for_points(n) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn genetic_is_sound_and_never_beats_enumeration(seed in 0u64..10_000) {
        let inst = DeskInstance::random(seed, 12, 4);
        let ds = inst.dataset();
        let out = genetic_search(&ds, Metric::Euclidean, inst.eps, &quick_genetic(ds.len(), seed)).unwrap();
        for r in out.pool.configurations() {
            prop_assert!(is_feasible(r, &ds).unwrap());
            let pts = r.points(&ds);
            prop_assert!(within_budget(enclosing_radius(&pts, Metric::Euclidean).unwrap(), inst.eps));
        }
        let full = solve_pool(&exhaustive_search(&ds, Metric::Euclidean, inst.eps, None).unwrap(), ds.len()).unwrap();
        prop_assert!(out.solution.objective >= full.objective - 1e-8);
        prop_assert!(out.trace.is_monotone(1e-9));
        prop_assert!(out.solution.diagnostics(&out.pool.problem(ds.len())).check(ds.len(), out.solution.objective).is_ok());
    }

    #[test]
    fn gencol_bounds_and_identity(seed in 0u64..10_000, log_tau in -1.5f64..1.0) {
        let inst = DeskInstance::random(seed, 9, 3);
        let ds = inst.dataset();
        let tau = 10f64.powf(log_tau);
        let params = GencolParams { time_limit: 20.0, stagnation_generations: 30, seed, ..GencolParams::new(tau, ds.len()) };
        let out = gencol_w2(&ds, &params).unwrap();
        let n = ds.len();
        prop_assert!(out.max_pool_size <= params.beta * n + params.samples_per_generation);
        prop_assert!(out.report.identity_residual() <= 1e-10);
        prop_assert!(out.trace.is_monotone(1e-9));
        for t in &out.trims {
            prop_assert_eq!(t.removed, n);
            prop_assert!(t.objective_after <= t.objective_before + 1e-9);
        }
        let full = dense_lp(n, &w2_columns(&inst, tau), &vec![1.0; n]).unwrap();
        prop_assert!(out.solution.objective >= full - 1e-8);
        let cert = certify_optimality(&out.solution, &ds, &CostModel::w2(tau).unwrap(), 1_000_000).unwrap();
        if cert.is_optimal {
            prop_assert!((out.solution.objective - full).abs() <= 1e-7, "{} vs {}", out.solution.objective, full);
        }
    }
}

#[test]
fn genetic_runs_are_reproducible() {
    let inst = DeskInstance::random(5, 12, 4);
    let ds = inst.dataset();
    let params = GeneticParams { max_proposals: Some(2000), ..quick_genetic(ds.len(), 9) };
    let a = genetic_search(&ds, Metric::Euclidean, inst.eps, &params).unwrap();
    let b = genetic_search(&ds, Metric::Euclidean, inst.eps, &params).unwrap();
    assert_eq!(a.pool.to_json(), b.pool.to_json());
    assert_eq!(a.solution.objective, b.solution.objective);
    assert_eq!(a.proposals, b.proposals);
}

#[test]
fn forced_growth_keeps_pool_bounded() {
    let inst = DeskInstance::random(77, 12, 4);
    let ds = inst.dataset();
    let n = ds.len();
    let params = GencolParams {
        gain_threshold: -1e9,
        time_limit: 1.0,
        stagnation_generations: 1000,
        ..GencolParams::new(0.5, n)
    };
    let out = gencol_w2(&ds, &params).unwrap();
    assert!(!out.trims.is_empty());
    assert!(out.max_pool_size <= 3 * n + n);
    for t in &out.trims {
        assert_eq!(t.removed, n);
        assert!(t.objective_after <= t.objective_before + 1e-9);
    }
}
