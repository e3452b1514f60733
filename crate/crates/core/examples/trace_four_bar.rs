//! Trace a four-bar linkage and write its node paths as SVG.
//!
//! Usage: `cargo run --example trace_four_bar [samples] [out.svg]`

use linkforge::geometry::Vec2;
use linkforge::kinematics::{
    trace, trajectory_svg, Linkage, MotorSpec, NodeDef, Orientation, Spin,
};

fn main() {
    let mut args = std::env::args().skip(1);
    let samples: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(32);
    let out = args.next().unwrap_or_else(|| "four_bar.svg".into());

    let linkage = Linkage::new(
        vec![
            NodeDef::motor(MotorSpec::rotary(Vec2::ZERO, 1.0, Spin::Clockwise)),
            NodeDef::fixed(2, Vec2::new(3.0, 0.0)),
            NodeDef::movable(3, [1, 2], [2.5, 2.5], Orientation::Positive),
        ],
        10.0,
    )
    .expect("valid four-bar");
    let tr = trace(&linkage, samples).expect("the four-bar assembles at every angle");

    for (t, p) in tr.times.iter().zip(tr.end_effector()).take(4) {
        println!("t = {t:.4}: coupler at ({:.6}, {:.6})", p.x, p.y);
    }
    std::fs::write(&out, trajectory_svg(&tr, None)).expect("writable output path");
    println!("{} samples written to {out}", samples);
}
