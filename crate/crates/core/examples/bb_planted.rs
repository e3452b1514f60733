//! Branch and bound on planted four-node instances.
//!
//! Usage: `cargo run --release --example bb_planted [instances] [node_limit] [workers]`

use std::time::Instant;

use linkforge::bb::{solve_parallel, BbConfig, BbEvent};
use linkforge::control::Control;
use linkforge::model::SynthesisConfig;
use linkforge::planted::{planted_set, planted_target, PlantSpec};

fn main() {
    let mut args = std::env::args().skip(1);
    let instances: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(3);
    let node_limit: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(5000);
    let workers: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);
    let spec = PlantSpec {
        extent: 100.0,
        ..PlantSpec::new(4, 8)
    };

    for (n, planted) in planted_set(&spec, instances, 0).iter().enumerate() {
        let mut syn = SynthesisConfig::new(4, spec.samples, 8, planted.box_side());
        syn.target = Some(planted_target(planted, spec.samples).samples().to_vec());
        let cfg = BbConfig {
            node_limit,
            workers,
            ..BbConfig::new(syn)
        };
        let threshold = 1e-4 * cfg.synthesis.box_side.powi(2) * std::f64::consts::TAU;

        let started = Instant::now();
        let out = solve_parallel(&cfg, &Control::default(), |e| {
            if let BbEvent::Incumbent(i) = e {
                println!(
                    "  incumbent {:.4e} at node {:?}",
                    i.objective, i.found_at_node
                );
            }
        })
        .expect("valid settings");
        let best = out
            .incumbent
            .as_ref()
            .map_or(f64::INFINITY, |i| i.objective);
        println!(
            "instance {n}: {:?}, best {best:.4e} ({}), {} nodes explored in {:.1?}",
            out.status,
            if best <= threshold {
                "reached"
            } else {
                "missed"
            },
            out.stats.explored,
            started.elapsed()
        );
    }
}
