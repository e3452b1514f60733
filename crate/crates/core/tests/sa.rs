use std::f64::consts::TAU;

use linkforge::control::Control;
use linkforge::geometry::Vec2;
use linkforge::kinematics::{sample_times, trace, CurveMode, Linkage, TargetCurve};
use linkforge::planted::{planted_target, random_linkage, PlantSpec};
use linkforge::sa::{
    cooling, evaluate, metropolis, mutate, run, try_move, MoveType, SaConfig, SaState, SaStop,
};
use linkforge::topology::{assignment_from_linkage, check_topology, flux_feasible};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn circle(r: f64, t: usize) -> TargetCurve {
    let pts = sample_times(t)
        .iter()
        .map(|&a| Vec2::new(r * a.sin(), r * a.cos()))
        .collect();
    TargetCurve::new(pts, CurveMode::Fixed).unwrap()
}

/// A planted four-node design, its target and settings sized to it.
fn planted(seed: u64) -> (Linkage, TargetCurve, SaConfig) {
    let spec = PlantSpec {
        extent: 100.0,
        ..PlantSpec::new(4, 8)
    };
    let l = random_linkage(&mut ChaCha8Rng::seed_from_u64(seed), &spec);
    let target = planted_target(&l, 8);
    let mut cfg = SaConfig::new(l.box_side());
    cfg.max_nodes = 4;
    cfg.samples = 8;
    (l, target, cfg)
}

fn structure_holds(l: &Linkage, k: usize) -> bool {
    let driving = l.without_trailing_fixed();
    if driving.len() == 1 {
        return l.len() <= k;
    }
    let a = assignment_from_linkage(&driving, k).unwrap();
    check_topology(&a).is_ok() && flux_feasible(&a).feasible()
}

#[test]
fn cooling_schedule_values() {
    let cfg = SaConfig::new(400.0);
    assert_eq!(cooling(&cfg, 0), 2.5e4);
    assert_eq!(cooling(&cfg, cfg.i_max), 2.5);
    assert!((cooling(&cfg, cfg.i_max / 2) - 250.0).abs() <= 250.0 * 1e-9);
    for i in 1..100 {
        assert!(cooling(&cfg, i * 500) < cooling(&cfg, (i - 1) * 500));
    }
}

#[test]
fn motor_circle_is_never_lost() {
    let b = 10.0;
    let threshold = 1e-4 * b * b * TAU;
    let mut total = 0.0;
    for seed in 0..5 {
        let mut cfg = SaConfig::new(b);
        cfg.samples = 8;
        cfg.i_max = 5000;
        cfg.seed = seed;
        let out = run(
            &cfg,
            &circle(b / 10.0, 8),
            None,
            &Control::default(),
            |_| {},
        )
        .unwrap();
        assert!(out.state.best_objective <= threshold);
        total += out.state.best_objective;
    }
    assert!(total / 5.0 <= threshold);
}

/// Chi-square statistic of `counts` against equal cell probabilities.
fn chi_square(counts: &[u64]) -> f64 {
    let expected = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum()
}

/// Attempted-move counts from about `draws` selections along a random walk.
fn move_counts(seed: u64, draws: u64) -> [u64; 4] {
    let (_, target, cfg) = planted(3);
    let mut state = SaState::new(linkforge::sa::initial_linkage(&cfg), &target, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while state.move_stats.iter().map(|s| s.attempted).sum::<u64>() < draws {
        let m = mutate(&mut state, &cfg, &target, &mut rng).unwrap();
        // walk the chain so the draws come from varied states
        if rng.random_bool(0.5) {
            state.current = m.candidate;
        }
    }
    state.move_stats.map(|s| s.attempted)
}

// upper 1% point of chi-square with three degrees of freedom
const CHI2_CRITICAL: f64 = 11.345;

#[test]
fn move_types_are_drawn_uniformly() {
    let counts = move_counts(SaConfig::new(1.0).seed, 10_000);
    assert!(chi_square(&counts) < CHI2_CRITICAL, "{counts:?}");
}

#[test]
fn pooled_move_counts_are_uniform() {
    let runs: Vec<[u64; 4]> = (0..20).map(|seed| move_counts(seed, 10_000)).collect();
    let pooled: Vec<u64> = (0..4).map(|i| runs.iter().map(|c| c[i]).sum()).collect();
    assert!(chi_square(&pooled) < CHI2_CRITICAL, "pooled {pooled:?}");
}

#[test]
fn uphill_moves_are_refused_at_low_temperature() {
    let (_, target, cfg) = planted(4);
    let start = linkforge::sa::initial_linkage(&cfg);
    let f0 = evaluate(&start, &target, 0.0).unwrap();
    let mut state = SaState::new(start, &target, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut uphill = Vec::new();
    while uphill.len() < 1000 {
        let m = mutate(&mut state, &cfg, &target, &mut rng).unwrap();
        let delta = evaluate(&m.candidate, &target, 0.0).unwrap() - f0;
        if delta > 0.0 {
            uphill.push(delta);
        }
    }
    let rate = |t: f64, rng: &mut ChaCha8Rng| {
        uphill
            .iter()
            .filter(|&&d| metropolis(d, t, rng.random()))
            .count() as f64
            / uphill.len() as f64
    };
    let at_min = rate(cfg.t_min, &mut rng);
    let hot = rate(cfg.t_max, &mut rng);
    assert!(
        at_min < 0.05,
        "acceptance {at_min} at the final temperature"
    );
    assert!(hot > at_min);
    assert_eq!(rate(cfg.t_min * 1e-9, &mut rng), 0.0);
}

#[test]
fn same_seed_same_chain() {
    let (_, target, mut cfg) = planted(1);
    cfg.i_max = 3000;
    cfg.seed = 9;
    let record = || {
        let mut lines = Vec::new();
        let out = run(&cfg, &target, None, &Control::default(), |p| {
            lines.push(serde_json::to_string(p).unwrap())
        })
        .unwrap();
        (lines, serde_json::to_string(&out.solution).unwrap())
    };
    let a = record();
    assert_eq!(a, record());
    cfg.seed = 10;
    let other = run(&cfg, &target, None, &Control::default(), |_| {}).unwrap();
    assert_ne!(serde_json::to_string(&other.solution).unwrap(), a.1);
}

#[test]
fn chain_bookkeeping() {
    let (_, target, mut cfg) = planted(2);
    cfg.i_max = 4000;
    let mut log = Vec::new();
    let out = run(&cfg, &target, None, &Control::default(), |p| {
        log.push(p.clone())
    })
    .unwrap();
    assert_eq!(out.stop, SaStop::Completed);
    assert_eq!(log.len(), cfg.i_max);
    let mut lowest = f64::INFINITY;
    for w in log.windows(2) {
        assert!(w[1].best_objective <= w[0].best_objective);
        assert!(w[1].temperature < w[0].temperature);
    }
    for p in &log {
        lowest = lowest.min(p.current_objective);
        assert!(p.best_objective <= lowest);
    }
    let s = &out.state;
    assert_eq!(evaluate(&s.best, &target, 0.0), Some(s.best_objective));
    assert!(trace(&s.best.without_trailing_fixed(), 8).is_ok());
    let accepted: u64 = s.move_stats.iter().map(|m| m.accepted).sum();
    assert_eq!(accepted as usize, log.iter().filter(|p| p.accepted).count());
    for m in &s.move_stats {
        assert!(m.accepted <= m.succeeded && m.succeeded <= m.attempted);
    }
    assert!(out.solution.check(1e-9).is_ok());
}

#[test]
fn interrupted_chain_reports_why() {
    let (_, target, cfg) = planted(0);
    let flag = std::sync::Arc::new(std::sync::atomic::AtomicBool::new(true));
    let out = run(
        &cfg,
        &target,
        None,
        &Control::default().with_cancel(flag),
        |_| {},
    )
    .unwrap();
    assert!(matches!(out.stop, SaStop::Interrupted(_)));
    assert_eq!(out.state.iteration, 0);
}

#[test]
fn bad_settings_are_rejected() {
    let target = circle(1.0, 8);
    let mut cfg = SaConfig::new(10.0);
    assert!(
        run(&cfg, &target, None, &Control::default(), |_| {}).is_err(),
        "sample count mismatch"
    );
    cfg.samples = 8;
    cfg.t_min = cfg.t_max;
    assert!(run(&cfg, &target, None, &Control::default(), |_| {}).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn local_optimization_never_raises_the_objective(plant in 0u64..1000, walk in 0u64..1000, steps in 0usize..6) {
        let (_, target, cfg) = planted(plant);
        let mut rng = ChaCha8Rng::seed_from_u64(walk);
        let mut l = linkforge::sa::initial_linkage(&cfg);
        for _ in 0..steps {
            let kind = [MoveType::Addition, MoveType::Perturbation][rng.random_range(0..2)];
            if let Some(next) = try_move(kind, &l, &cfg, &target, &mut rng) {
                l = next;
            }
        }
        let before = evaluate(&l, &target, 0.0).unwrap();
        if let Some(after) = try_move(MoveType::LocalOptimization, &l, &cfg, &target, &mut rng) {
            prop_assert!(evaluate(&after, &target, 0.0).unwrap() <= before);
        }
    }

    #[test]
    fn structural_moves_keep_a_valid_topology(plant in 0u64..1000, walk in 0u64..1000) {
        let (_, target, cfg) = planted(plant);
        let mut rng = ChaCha8Rng::seed_from_u64(walk);
        let mut l = linkforge::sa::initial_linkage(&cfg);
        for _ in 0..40 {
            let kind = MoveType::ALL[rng.random_range(0..4)];
            if let Some(next) = try_move(kind, &l, &cfg, &target, &mut rng) {
                if matches!(kind, MoveType::Addition | MoveType::Subtraction) {
                    prop_assert!(structure_holds(&next, cfg.max_nodes), "{next:?}");
                }
                prop_assert!(evaluate(&next, &target, 0.0).is_some());
                l = next;
            }
        }
    }
}
