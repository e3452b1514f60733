use std::f64::consts::TAU;
use std::path::Path;
use std::process::{Command, Output};

use linkforge::geometry::Vec2;
use linkforge::kinematics::{trace, Linkage, MotorSpec, Spin, Trajectory};
use linkforge::planted::{planted_set, planted_target, PlantSpec};
use linkforge::solution::{Provenance, Solution};

fn linkforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linkforge"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn write_circle(dir: &Path) -> String {
    let pts: Vec<Vec2> = (0..60)
        .map(|i| Vec2::from_angle(TAU * i as f64 / 60.0) * 3.0)
        .collect();
    let p = path(dir, "circle.json");
    std::fs::write(&p, serde_json::json!({ "points": pts }).to_string()).unwrap();
    p
}

/// Every opening tag is closed in order.
fn well_formed(svg: &str) -> bool {
    let body = svg
        .trim_start()
        .strip_prefix("<?xml")
        .and_then(|s| s.split_once("?>"))
        .map_or(svg, |(_, b)| b);
    let mut stack = Vec::new();
    for tag in body.split('<').skip(1) {
        let tag = tag.split('>').next().unwrap();
        let name = |t: &str| {
            t.split_whitespace()
                .next()
                .unwrap_or("")
                .trim_end_matches('/')
                .to_string()
        };
        if let Some(close) = tag.strip_prefix('/') {
            if stack.pop() != Some(name(close)) {
                return false;
            }
        } else if !tag.ends_with('/') {
            stack.push(name(tag));
        }
    }
    stack.is_empty()
}

#[test]
fn annealing_smoke_run_writes_a_valid_solution() {
    let dir = tempfile::tempdir().unwrap();
    let target = write_circle(dir.path());
    let (sol, svg) = (path(dir.path(), "sol.json"), path(dir.path(), "sol.svg"));
    let out = linkforge(&[
        "synth",
        "--target",
        &target,
        "--solver",
        "sa",
        "--seed",
        "1",
        "--time-limit",
        "30s",
        "--out",
        &sol,
        "--svg",
        &svg,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&sol).unwrap();
    let s: Solution = serde_json::from_str(&text).unwrap();
    s.check(1e-9).unwrap();
    assert_eq!(s.target.len(), 20);
    assert!(matches!(&s.provenance, Provenance::Sa(c) if c.seed == 1 && c.max_nodes == 7));
    // the written file round-trips through its own parser
    assert_eq!(serde_json::to_string_pretty(&s).unwrap(), text);

    let picture = std::fs::read_to_string(&svg).unwrap();
    assert!(well_formed(&picture));
    let line = picture
        .lines()
        .find(|l| l.contains("class=\"end-effector\""))
        .unwrap();
    let pts: Vec<Vec2> = line
        .split("points=\"")
        .nth(1)
        .unwrap()
        .trim_end_matches("\"/>")
        .split(' ')
        .map(|xy| {
            let (x, y) = xy.split_once(',').unwrap();
            Vec2::new(x.parse().unwrap(), y.parse().unwrap())
        })
        .collect();
    assert_eq!(pts, s.trajectory.end_effector());
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let target = write_circle(dir.path());
    assert_eq!(
        code(&linkforge(&["synth", "--target", &target, "--K", "1"])),
        1
    );
    assert_eq!(
        code(&linkforge(&[
            "synth",
            "--target",
            &path(dir.path(), "missing.json")
        ])),
        1
    );
    assert_eq!(
        code(&linkforge(&["synth", "--target", &target, "--box", "1,2"])),
        1
    );
    assert_eq!(code(&linkforge(&["frobnicate"])), 1);
    assert_eq!(code(&linkforge(&["--help"])), 0);

    let bad = path(dir.path(), "bad.json");
    std::fs::write(&bad, "{\"points\": [[0, 0], [1, 0]],\n \"colour\": 3}").unwrap();
    let out = linkforge(&["synth", "--target", &bad]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("colour") && err.contains("line 2"), "{err}");
}

#[test]
fn planted_target_is_recovered_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let spec = PlantSpec {
        extent: 100.0,
        ..PlantSpec::new(4, 8)
    };
    let planted = planted_set(&spec, 1, 0).pop().unwrap();
    let b = planted.box_side();
    let target = path(dir.path(), "planted.json");
    std::fs::write(
        &target,
        serde_json::json!({ "points": planted_target(&planted, 8).samples() }).to_string(),
    )
    .unwrap();
    let sol = path(dir.path(), "bb.json");
    let out = linkforge(&[
        "synth",
        "--target",
        &target,
        "--solver",
        "bb",
        "--K",
        "4",
        "--T",
        "8",
        "--lambda",
        "0",
        "--box-side",
        &b.to_string(),
        "--center",
        "0,0",
        "--node-limit",
        "5000",
        "--out",
        &sol,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let s: Solution = serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    assert!(
        s.objective.total <= 1e-4 * b * b * TAU,
        "{}",
        s.objective.total
    );

    let out = linkforge(&["validate", "--solution", &sol, "--model", "exact"]);
    assert_eq!(
        code(&out),
        0,
        "{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("Satisfied"));
}

#[test]
fn trace_of_a_motor_writes_circle_points() {
    let dir = tempfile::tempdir().unwrap();
    let motor = Linkage::motor_only(
        MotorSpec::rotary(Vec2::new(1.0, 2.0), 0.5, Spin::Clockwise),
        10.0,
    )
    .unwrap();
    let (input, traj, svg) = (
        path(dir.path(), "m.json"),
        path(dir.path(), "t.json"),
        path(dir.path(), "t.svg"),
    );
    std::fs::write(&input, serde_json::to_string(&motor).unwrap()).unwrap();
    let out = linkforge(&[
        "trace",
        "--linkage",
        &input,
        "--samples",
        "4",
        "--out",
        &traj,
        "--svg",
        &svg,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let tr: Trajectory = serde_json::from_str(&std::fs::read_to_string(&traj).unwrap()).unwrap();
    assert_eq!(tr, trace(&motor, 4).unwrap());
    assert_eq!(tr.end_effector().len(), 4);
    for p in tr.end_effector() {
        assert!((p.distance(Vec2::new(1.0, 2.0)) - 0.5).abs() < 1e-12);
    }
    assert!(well_formed(&std::fs::read_to_string(&svg).unwrap()));

    std::fs::write(&input, "{\"nodes\": 3}").unwrap();
    assert_eq!(code(&linkforge(&["trace", "--linkage", &input])), 1);
}

#[test]
fn exports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for (model, format) in [("exact", "json"), ("micp", "lp"), ("minlp", "lp")] {
        let run = |name: &str| {
            let p = path(dir.path(), name);
            let out = linkforge(&[
                "export", "--K", "3", "--T", "4", "--S", "2", "--model", model, "--format", format,
                "--out", &p,
            ]);
            assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
            std::fs::read(&p).unwrap()
        };
        let a = run("a");
        assert!(!a.is_empty());
        assert_eq!(a, run("b"));
    }
    let model = path(dir.path(), "exact.json");
    linkforge(&["export", "--K", "3", "--T", "4", "--out", &model]);
    let ir =
        linkforge::model::ModelIR::from_json(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(ir.to_json(), std::fs::read_to_string(&model).unwrap());
}
