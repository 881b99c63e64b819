mod common;

use fairshare::closed_form::solve_closed_form;
use fairshare::hypersimplex::contains;
use fairshare::maximin::{solve_maximin_observed, SolverConfig};
use fairshare::{brute_force_min_load, solve_maximin, GameSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn returned_loads_are_an_exact_best_response() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..40 {
        let n = rng.random_range(2..=6);
        let m = rng.random_range(2..=4);
        let r = rng.random_range(1..n.min(3));
        let spec = GameSpec::new(common::random_means(&mut rng, n, 0.0, 3.0), m, r, None).unwrap();
        let res = solve_maximin(&spec, &SolverConfig::for_horizon(&spec, 500).unwrap()).unwrap();
        let bf = brute_force_min_load(&res.strategy, &spec).unwrap();
        assert!((bf.value - res.value).abs() <= 1e-12);
    }
}

#[test]
fn every_iterate_is_feasible() {
    let spec = GameSpec::new(vec![3.0, 0.5, 2.0, 1.0, 1.5], 3, 2, None).unwrap();
    let mut seen = 0;
    solve_maximin_observed(&spec, &SolverConfig::new(0.3, 2000).unwrap(), |_, p| {
        assert!(contains(p.probs(), 2, 1e-9));
        seen += 1;
    })
    .unwrap();
    assert_eq!(seen, 2000);
}

#[test]
fn certificate_covers_the_gap_to_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for case in 0..30 {
        let n = rng.random_range(2..=6);
        let (m, r) = [(2, 1), (3, 1), (2, 2)][case % 3];
        if r >= n {
            continue;
        }
        let spec = GameSpec::new(common::random_means(&mut rng, n, 0.1, 4.0), m, r, None).unwrap();
        let exact = solve_closed_form(&spec).unwrap();
        if exact.is_fallback() {
            continue;
        }
        let res = solve_maximin(&spec, &SolverConfig::from_epsilon(0.02).unwrap()).unwrap();
        let gap = exact.value - res.value;
        assert!(gap >= -1e-9 && gap <= res.error_bound + 1e-9, "gap {gap}, bound {}", res.error_bound);
    }
}
