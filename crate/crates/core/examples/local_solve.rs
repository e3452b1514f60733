//! Restore a perturbed four-bar to feasibility and then fit it to a target
//! with the local solver, topology held fixed.
//!
//! Usage: `cargo run --release --example local_solve`

use linkforge::geometry::Vec2;
use linkforge::kinematics::{trace, Linkage, MotorSpec, NodeDef, Orientation, Spin};
use linkforge::model::{build_exact, extract_linkage, linkage_values, names, SynthesisConfig};
use linkforge::nlp::{solve_phase1, solve_phase2, Fixings, NlpProblem, NlpSettings};
use linkforge::topology::assignment_from_linkage;

fn four_bar(coupler: f64) -> Linkage {
    Linkage::new(
        vec![
            NodeDef::motor(MotorSpec::rotary(Vec2::ZERO, 1.0, Spin::Clockwise)),
            NodeDef::fixed(2, Vec2::new(3.0, 0.0)),
            NodeDef::movable(3, [1, 2], [coupler, 2.5], Orientation::Positive),
        ],
        10.0,
    )
    .unwrap()
}

fn main() {
    let t = 8;
    let goal = four_bar(2.5);
    let mut cfg = SynthesisConfig::new(3, t, 4, 10.0);
    cfg.target = Some(trace(&goal, t).unwrap().end_effector().to_vec());
    let model = build_exact(&cfg);

    let start = four_bar(2.8);
    let topo = assignment_from_linkage(&start, cfg.k).unwrap();
    let problem = NlpProblem::new(&model, &Fixings::topology(&model, &topo));
    let mut x0 = linkage_values(&model, &cfg, &start).unwrap();
    // knock the coupler links off their constant lengths
    for q in (1..=t).step_by(2) {
        for d in 1..=2 {
            x0[model.id(&names::dx(d, 3, q))] *= 1.05;
            x0[model.id(&names::dy(d, 3, q))] *= 1.05;
        }
    }
    println!(
        "start violation {:.2e}",
        problem.max_violation(&problem.to_scaled(&x0))
    );

    let settings = NlpSettings::default();
    let p1 = solve_phase1(&problem, &x0, &settings).expect("well-formed problem");
    println!(
        "phase I: {:?} after {} iterations, violation {:.2e}",
        p1.status, p1.iterations, p1.max_violation
    );
    let p2 = solve_phase2(&problem, &p1.x, &settings).expect("feasible start");
    println!("phase II: {:?}, objective {:.3e}", p2.status, p2.objective);

    let fitted =
        extract_linkage(&model, &cfg, &topo, &p2.x).expect("solution realises the topology");
    println!(
        "fitted linkage: {}",
        serde_json::to_string(&fitted).unwrap()
    );
}
