//! Build the three optimization models for a circle target and export them.
//!
//! Usage: `cargo run --example export_model [K] [T] [S] [out_dir]`

use std::path::PathBuf;

use linkforge::geometry::Vec2;
use linkforge::kinematics::{sample_times, CurveMode, TargetCurve};
use linkforge::model::{
    build_exact, build_micp_relaxation, build_minlp, export, ExportFormat, ExportOptions,
    SynthesisConfig,
};

fn main() {
    let mut args = std::env::args().skip(1);
    let mut next = |d: usize| args.next().and_then(|a| a.parse().ok()).unwrap_or(d);
    let (k, t, s) = (next(4), next(8), next(4));
    let dir = PathBuf::from(std::env::args().nth(4).unwrap_or_else(|| ".".into()));

    let pts = sample_times(t)
        .iter()
        .map(|&a| Vec2::new(2.0 * a.sin(), 2.0 * a.cos()))
        .collect();
    let target = TargetCurve::new(pts, CurveMode::Fixed).expect("finite samples");
    let cfg = SynthesisConfig::for_target(&target, k, s);

    for (name, model) in [
        ("exact", build_exact(&cfg)),
        ("micp", build_micp_relaxation(&cfg)),
        ("minlp", build_minlp(&cfg)),
    ] {
        let path = dir.join(format!("{name}.lp"));
        let bytes =
            export(&model, ExportFormat::Lp, ExportOptions::default()).expect("finite model");
        std::fs::write(&path, &bytes).expect("writable output directory");
        println!(
            "{name:>5}: {} variables, {} free binaries, {} linear and {} quadratic rows -> {}",
            model.variables.len(),
            model.free_binaries(),
            model.linear_constraints.len(),
            model.quadratic_constraints.len(),
            path.display()
        );
    }
}
