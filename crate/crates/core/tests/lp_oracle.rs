mod common;

use advrisk::lp::{self, ReducedProblem};
use advrisk::Configuration;
use common::dense_lp;
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = (usize, Vec<(Vec<u32>, f64)>)> {
    (1usize..=10).prop_flat_map(|n| {
        let col = (proptest::collection::btree_set(0..n as u32, 1..=n.min(4)), 0.2f64..3.0)
            .prop_map(|(s, c)| (s.into_iter().collect::<Vec<_>>(), c));
        (Just(n), proptest::collection::vec(col, 0..40))
    })
}

fn with_singletons(n: usize, extra: &[(Vec<u32>, f64)]) -> Vec<(Configuration, f64)> {
    let mut cols: Vec<(Configuration, f64)> = (0..n as u32).map(|i| (Configuration::singleton(i), 1.0)).collect();
    for (s, c) in extra {
        if s.len() > 1 && !cols.iter().any(|(r, _)| r.indices() == s.as_slice()) {
            cols.push((Configuration::new(s.clone()), *c));
        }
    }
    cols
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_dense_tableau((n, extra) in instance()) {
        let cols = with_singletons(n, &extra);
        let rp = ReducedProblem::new(n, cols.iter().map(|(r, c)| (r, *c)).collect());
        let sol = lp::solve(&rp).unwrap();
        let dense: Vec<(Vec<u32>, f64)> = cols.iter().map(|(r, c)| (r.indices().to_vec(), *c)).collect();
        let expected = dense_lp(n, &dense, &vec![1.0; n]).unwrap();
        prop_assert!((sol.objective - expected).abs() <= 1e-8, "{} vs {}", sol.objective, expected);
        let check = sol.diagnostics(&rp).check(n, sol.objective);
        prop_assert!(check.is_ok(), "{:?}", check);
        prop_assert!(sol.support_size() <= n);
    }

    #[test]
    fn general_rhs_matches_dense_tableau((n, extra) in instance(), seed in 0u64..1000) {
        let cols = with_singletons(n, &extra);
        let rhs: Vec<f64> = (0..n).map(|i| 0.1 + ((seed + 7 * i as u64) % 13) as f64 / 10.0).collect();
        let rp = ReducedProblem::new(n, cols.iter().map(|(r, c)| (r, *c)).collect()).with_rhs(rhs.clone());
        let sol = lp::solve(&rp).unwrap();
        let dense: Vec<(Vec<u32>, f64)> = cols.iter().map(|(r, c)| (r.indices().to_vec(), *c)).collect();
        let expected = dense_lp(n, &dense, &rhs).unwrap();
        prop_assert!((sol.objective - expected).abs() <= 1e-8);
        prop_assert!((sol.dual_objective(&rhs) - sol.objective).abs() <= 1e-8);
    }

    #[test]
    fn without_singletons_feasibility_agrees((n, extra) in instance()) {
        let cols: Vec<(Configuration, f64)> =
            extra.iter().map(|(s, c)| (Configuration::new(s.clone()), *c)).collect();
        let mut seen = std::collections::HashSet::new();
        let cols: Vec<_> = cols.into_iter().filter(|(r, _)| seen.insert(r.clone())).collect();
        let dense: Vec<(Vec<u32>, f64)> = cols.iter().map(|(r, c)| (r.indices().to_vec(), *c)).collect();
        let expected = dense_lp(n, &dense, &vec![1.0; n]);
        let rp = ReducedProblem::new(n, cols.iter().map(|(r, c)| (r, *c)).collect());
        match (lp::solve(&rp), expected) {
            (Ok(sol), Some(v)) => prop_assert!((sol.objective - v).abs() <= 1e-8),
            (Err(_), None) => {}
            (got, want) => prop_assert!(false, "solver {:?} vs oracle {:?}", got.map(|s| s.objective), want),
        }
    }

    #[test]
    fn adding_columns_never_hurts((n, extra) in instance(), split in 0usize..40) {
        let cols = with_singletons(n, &extra);
        let k = (n + split).min(cols.len());
        let small = ReducedProblem::new(n, cols[..k].iter().map(|(r, c)| (r, *c)).collect());
        let big = ReducedProblem::new(n, cols.iter().map(|(r, c)| (r, *c)).collect());
        let a = lp::solve(&small).unwrap();
        let b = lp::warm_solve(&big, &a).unwrap();
        let cold = lp::solve(&big).unwrap();
        prop_assert!(b.objective <= a.objective + 1e-9);
        prop_assert!((b.objective - cold.objective).abs() <= 1e-9);
    }
}
