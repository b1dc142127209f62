//! Search behavior on the quadratic surrogate landscape: success rate,
//! early-exit economy, correctness of any satisfying answer, and
//! determinism of the whole trace.

use disttune_core::hyper::AXES;
use disttune_core::tuner::surrogate::Bowl;
use disttune_core::{tune, HyperParams, TuneOptions};

fn options(seed: u64) -> TuneOptions {
    TuneOptions {
        seed,
        ..TuneOptions::default()
    }
}

#[test]
fn satisfying_start_costs_exactly_one_evaluation() {
    let bowl = Bowl::new(HyperParams::new(0.1, 5, 20, 500).unwrap());
    let outcome = tune(bowl.objective(), bowl.optimum, &options(0)).unwrap();
    assert!(outcome.satisfied);
    assert_eq!(outcome.evaluations, 1);
    assert_eq!(outcome.trace.len(), 1);
    assert_eq!(outcome.best_hyper, bowl.optimum);
}

#[test]
fn found_answers_are_genuinely_satisfying() {
    let thd = TuneOptions::default().thresholds.aare;
    for seed in 0..20u64 {
        let bowl = Bowl::random(seed);
        let outcome = tune(bowl.objective(), HyperParams::default_setting(), &options(seed)).unwrap();
        if outcome.satisfied {
            assert!(
                bowl.score(&outcome.best_hyper) <= thd,
                "seed {seed}: reported satisfying point scores {}",
                bowl.score(&outcome.best_hyper)
            );
            assert!(bowl.squared_steps(&outcome.best_hyper) <= 4);
        }
        assert!(outcome.evaluations <= options(seed).budget);
        let recomputed = bowl.score(&outcome.best_hyper);
        assert!((recomputed - outcome.best_aare).abs() < 1e-12);
    }
}

#[test]
fn most_random_bowls_are_solved_within_budget() {
    let mut solved = 0;
    let total = 25;
    for seed in 100..100 + total as u64 {
        let bowl = Bowl::random(seed);
        let outcome = tune(bowl.objective(), HyperParams::default_setting(), &options(seed)).unwrap();
        if outcome.satisfied {
            solved += 1;
        }
    }
    assert!(
        solved * 100 >= total * 80,
        "only {solved}/{total} bowls solved"
    );
}

#[test]
fn trace_is_deterministic_for_a_fixed_seed() {
    let bowl = Bowl::random(7);
    let a = tune(bowl.objective(), HyperParams::default_setting(), &options(3)).unwrap();
    let b = tune(bowl.objective(), HyperParams::default_setting(), &options(3)).unwrap();
    assert_eq!(a.evaluations, b.evaluations);
    assert_eq!(a.satisfied, b.satisfied);
    assert_eq!(a.best_hyper, b.best_hyper);
    let keys = |o: &disttune_core::TuneOutcome<()>| {
        o.trace.iter().map(|t| t.hyper.grid_key()).collect::<Vec<_>>()
    };
    assert_eq!(keys(&a), keys(&b));
}

#[test]
fn trace_points_all_sit_on_the_grid() {
    let bowl = Bowl::random(11);
    let outcome = tune(bowl.objective(), HyperParams::default_setting(), &options(5)).unwrap();
    for entry in &outcome.trace {
        let key = entry.hyper.grid_key();
        for (i, axis) in AXES.iter().enumerate() {
            assert!(key[i] < axis.points);
        }
    }
    assert!(!outcome.trace.is_empty());
    let min = outcome
        .trace
        .iter()
        .map(|t| t.aare)
        .fold(f64::INFINITY, f64::min);
    assert!((min - outcome.best_aare).abs() < 1e-12);
}

#[test]
fn evaluations_count_cache_misses_not_trace_length() {
    let bowl = Bowl::random(13);
    let outcome = tune(bowl.objective(), HyperParams::default_setting(), &options(9)).unwrap();
    assert_eq!(outcome.evaluations, outcome.trace.len());
    let mut seen = std::collections::HashSet::new();
    for entry in &outcome.trace {
        assert!(
            seen.insert(entry.hyper.grid_key()),
            "duplicate evaluation of {} in trace",
            entry.hyper
        );
    }
}
