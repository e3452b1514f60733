mod common;

use linkforge::geometry::Vec2;
use linkforge::kinematics::{
    trace, CurveMode, KinematicsError, Linkage, MotorSpec, NodeDef, Orientation, Spin, TargetCurve,
};
use linkforge::model::{
    build_exact, build_geometric_exact, extract_linkage, linkage_values, names, validate_with_tol,
    ModelIR, SynthesisConfig,
};
use linkforge::nlp::{
    refine_linkage, solve_phase1, solve_phase2, Fixings, NlpError, NlpProblem, NlpSettings,
    NlpStatus, ARMIJO_C,
};
use linkforge::planted::{random_linkage, PlantSpec};
use linkforge::topology::assignment_from_linkage;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::four_bar;

const T: usize = 8;

fn config(target: Option<Vec<Vec2>>) -> SynthesisConfig {
    let mut cfg = SynthesisConfig::new(3, T, 4, 10.0);
    cfg.target = target;
    cfg
}

fn own_trace(l: &Linkage) -> Vec<Vec2> {
    trace(l, T).unwrap().end_effector().to_vec()
}

fn setup(target: Vec<Vec2>) -> (SynthesisConfig, ModelIR, NlpProblem, Vec<f64>) {
    let cfg = config(Some(target));
    let model = build_exact(&cfg);
    let l = four_bar();
    let topo = assignment_from_linkage(&l, cfg.k).unwrap();
    let p = NlpProblem::new(&model, &Fixings::topology(&model, &topo));
    let x0 = linkage_values(&model, &cfg, &l).unwrap();
    (cfg, model, p, x0)
}

#[test]
fn traced_design_needs_no_restoration() {
    let (_, _, p, x0) = setup(own_trace(&four_bar()));
    let r = solve_phase1(&p, &x0, &NlpSettings::default()).unwrap();
    assert_eq!(r.status, NlpStatus::Feasible);
    assert_eq!(r.iterations, 0);
    assert!(r.max_violation <= 1e-9, "{}", r.max_violation);
}

#[test]
fn perturbed_lengths_are_restored() {
    let (cfg, model, p, mut x0) = setup(own_trace(&four_bar()));
    for q in (1..=T).step_by(2) {
        for d in 1..=2 {
            x0[model.id(&names::dx(d, 3, q))] *= 1.05;
            x0[model.id(&names::dy(d, 3, q))] *= 1.05;
        }
    }
    assert!(p.max_violation(&p.to_scaled(&x0)) > 1e-3);
    let r = solve_phase1(&p, &x0, &NlpSettings::default()).unwrap();
    assert_eq!(r.status, NlpStatus::Feasible, "{:?}", r.log.last());
    let v = validate_with_tol(&model, &r.x, 1e-6).unwrap();
    assert!(
        v.is_satisfied(),
        "{:?} {:?}",
        r.max_violation,
        v.violations().iter().take(3).collect::<Vec<_>>()
    );

    let b = cfg.box_side;
    for d in 1..=2 {
        let len = |q: usize| {
            Vec2::new(
                r.x[model.id(&names::dx(d, 3, q))],
                r.x[model.id(&names::dy(d, 3, q))],
            )
            .norm()
        };
        for q in 1..=T {
            let next = if q == T { 1 } else { q + 1 };
            assert!(
                (len(q) - len(next)).abs() <= 1e-6 * b,
                "length drift at q = {q}"
            );
        }
    }
    // re-trace the restored geometry and compare with the solver's positions
    let topo = assignment_from_linkage(&four_bar(), cfg.k).unwrap();
    let restored = extract_linkage(&model, &cfg, &topo, &r.x).unwrap();
    let tr = trace(&restored, T).unwrap();
    for q in 1..=T {
        let n3 = Vec2::new(
            r.x[model.id(&names::nx(3, q))],
            r.x[model.id(&names::ny(3, q))],
        );
        assert!(n3.distance(tr.end_effector()[q - 1]) <= 1e-5 * b);
    }
}

#[test]
fn unclosable_triangle_is_reported_infeasible() {
    let cfg = config(None);
    let model = build_geometric_exact(&cfg);
    let topo = assignment_from_linkage(&four_bar(), cfg.k).unwrap();
    let mut fx = Fixings::topology(&model, &topo);
    // ground pivot in one corner, motor in the other, short links
    for q in 1..=T {
        fx.restrict(model.id(&names::nx(2, q)), 4.9, 5.0);
        fx.restrict(model.id(&names::ny(2, q)), 4.9, 5.0);
        fx.restrict(model.id(&names::mx(q)), -0.1, 0.1);
        fx.restrict(model.id(&names::my(q)), -0.1, 0.1);
        for d in 1..=2 {
            fx.restrict(model.id(&names::dx(d, 3, q)), -0.1, 0.1);
            fx.restrict(model.id(&names::dy(d, 3, q)), -0.1, 0.1);
        }
    }
    fx.restrict(model.id(names::XC), -5.0, -4.8);
    fx.restrict(model.id(names::YC), -5.0, -4.8);
    let p = NlpProblem::new(&model, &fx);
    let x0 = vec![0.0; model.variables.len()];
    let r = solve_phase1(&p, &x0, &NlpSettings::default()).unwrap();
    assert_eq!(r.status, NlpStatus::Infeasible, "{:?}", r.log.last());
    assert!(r.max_violation > 1e-2);
}

#[test]
fn own_trace_is_stationary() {
    let (_, _, p, x0) = setup(own_trace(&four_bar()));
    let r = solve_phase2(&p, &x0, &NlpSettings::default()).unwrap();
    assert_eq!(r.status, NlpStatus::Feasible);
    assert_eq!(r.iterations, 0);
    assert!(r.objective.abs() <= 1e-10);
}

fn offset_ellipse() -> Vec<Vec2> {
    let base = own_trace(&four_bar());
    let c = base.iter().fold(Vec2::ZERO, |a, p| a + *p) * (1.0 / T as f64);
    base.iter()
        .enumerate()
        .map(|(q, _)| {
            let a = std::f64::consts::TAU * (q + 1) as f64 / T as f64;
            c + Vec2::new(0.3 + 0.6 * a.cos(), 0.1 + 0.25 * a.sin())
        })
        .collect()
}

#[test]
fn objective_falls_across_accepted_iterations() {
    let (_, model, p, x0) = setup(offset_ellipse());
    let settings = NlpSettings {
        record_steps: true,
        ..Default::default()
    };
    let start = p.objective(&p.to_scaled(&x0));
    let r = solve_phase2(&p, &x0, &settings).unwrap();
    let accepted: Vec<f64> = r
        .log
        .iter()
        .filter(|it| it.accepted)
        .map(|it| it.objective)
        .collect();
    assert!(!accepted.is_empty());
    let mut prev = start;
    for v in accepted {
        assert!(v < prev, "objective rose from {prev} to {v}");
        prev = v;
    }
    assert_eq!(r.status, NlpStatus::Feasible, "{:?}", r.log.last());
    assert!(r.objective < start);
    assert!(r.max_violation <= 1e-6);
    let v = validate_with_tol(&model, &r.x, 1e-6).unwrap();
    assert!(
        v.is_satisfied(),
        "{:?} {:?}",
        r.max_violation,
        v.violations().iter().take(3).collect::<Vec<_>>()
    );
    for it in &r.log {
        for s in &it.line_steps {
            assert!(s.f1 <= s.f0 + ARMIJO_C * s.slope);
        }
    }
}

#[test]
fn phase_two_rejects_infeasible_start() {
    let (_, model, p, mut x0) = setup(offset_ellipse());
    x0[model.id(&names::nx(3, 1))] += 5.0;
    match solve_phase2(&p, &x0, &NlpSettings::default()) {
        Err(NlpError::InfeasibleStart { violation }) => assert!(violation > 0.1),
        other => panic!("expected rejection, got {other:?}"),
    }
}

#[test]
fn iteration_logs_are_reproducible() {
    let (_, _, p, x0) = setup(offset_ellipse());
    let settings = NlpSettings {
        record_steps: true,
        ..Default::default()
    };
    let a = solve_phase2(&p, &x0, &settings).unwrap();
    let b = solve_phase2(&p, &x0, &settings).unwrap();
    assert_eq!(a.log_json(), b.log_json());
    assert_eq!(a.x, b.x);
}

#[test]
fn row_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let k = if case % 2 == 0 { 3 } else { 4 };
        let t = [4, 6][case % 2];
        let l = random_linkage(&mut rng, &PlantSpec::new(k, t));
        let mut cfg = SynthesisConfig::new(k, t, 4, 4.0);
        cfg.target = Some(
            (0..t)
                .map(|_| Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        );
        let model = build_exact(&cfg);
        let topo = assignment_from_linkage(&l, k).unwrap();
        let p = NlpProblem::new(&model, &Fixings::topology(&model, &topo));
        let y: Vec<f64> = (0..p.dim()).map(|_| rng.random_range(0.0..1.0)).collect();
        let jac = p.row_jacobian(&y);
        let h = 1e-6;
        for (r, row) in jac.iter().enumerate() {
            for &(i, a) in row {
                let (mut yp, mut ym) = (y.clone(), y.clone());
                yp[i] += h;
                ym[i] -= h;
                let fd = (p.row_values(&yp)[r] - p.row_values(&ym)[r]) / (2.0 * h);
                assert!(
                    (fd - a).abs() <= 1e-5 * a.abs().max(1.0),
                    "case {case} row {r} var {i}: {a} vs {fd}"
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn phase_one_merit_never_rises_when_accepted(scale in 0.8f64..1.2, q in 1usize..=T) {
        let (_, model, p, mut x0) = setup(own_trace(&four_bar()));
        x0[model.id(&names::dx(1, 3, q))] *= scale;
        x0[model.id(&names::nx(2, q))] += scale - 1.0;
        let r = solve_phase1(&p, &x0, &NlpSettings::default()).unwrap();
        let mut prev = p.violation_merit(&p.to_scaled(&x0));
        for it in r.log.iter().filter(|it| it.accepted) {
            prop_assert!(it.merit <= prev);
            prev = it.merit;
        }
    }
}

#[test]
fn refinement_stops_at_dead_centre() {
    // at t = 3π/2 the motor sits at (−1, 0), four units from the pivot, and
    // the two links barely reach
    let a = 2.0 / (1.0 - 5e-5);
    let l = Linkage::new(
        vec![
            NodeDef::motor(MotorSpec::rotary(Vec2::ZERO, 1.0, Spin::Clockwise)),
            NodeDef::fixed(2, Vec2::new(3.0, 0.0)),
            NodeDef::movable(3, [1, 2], [a, a], Orientation::Positive),
        ],
        10.0,
    )
    .unwrap();
    let target = TargetCurve::new(own_trace(&l), CurveMode::Fixed).unwrap();
    assert!(matches!(
        refine_linkage(&l, &target),
        Err(KinematicsError::NearSingular { .. })
    ));
}
