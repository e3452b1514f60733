//! Anneal towards the trace of a random four-node linkage.
//!
//! Usage: `cargo run --release --example anneal_planted [instances] [iterations]`

use linkforge::control::Control;
use linkforge::planted::{planted_set, planted_target, PlantSpec};
use linkforge::sa::{run, SaConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let instances: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);
    let iterations: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(50_000);
    let extent: f64 = std::env::var("EXTENT")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(100.0);
    let spec = PlantSpec {
        extent,
        ..PlantSpec::new(4, 8)
    };
    for (seed, planted) in planted_set(&spec, instances, 0).iter().enumerate() {
        let target = planted_target(planted, spec.samples);
        let mut cfg = SaConfig::new(planted.box_side());
        cfg.max_nodes = 4;
        cfg.samples = spec.samples;
        cfg.i_max = iterations;
        cfg.seed = seed as u64;
        let threshold = 1e-4 * cfg.box_side.powi(2) * std::f64::consts::TAU;
        let out = run(&cfg, &target, None, &Control::default(), |_| {}).expect("valid settings");
        println!(
            "instance {seed}: best {:.4e} (threshold {threshold:.4e}) with {} nodes, {}",
            out.state.best_objective,
            out.state.best.len(),
            if out.state.best_objective <= threshold {
                "reached"
            } else {
                "missed"
            }
        );
    }
}
