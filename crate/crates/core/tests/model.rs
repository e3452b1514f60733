mod common;

use std::collections::BTreeMap;

use linkforge::geometry::Vec2;
use linkforge::kinematics::{trace, CurveMode, Linkage};
use linkforge::model::{
    self, build_exact, build_geometric_exact, build_micp_relaxation, build_minlp,
    build_topological, encode_sos1, linkage_values, max_overestimation_gap, names, sos_satisfied,
    topology_values, validate, BoxConstraint, ExportFormat, ExportOptions, ModelIR, ModelKind,
    ResidualKind, SectorTable, SosKind, SynthesisConfig, Tag,
};
use linkforge::planted::{random_linkage, PlantSpec};
use linkforge::topology::{enumerate_topologies, jansen_assignment, structure_set};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn four_bar_cfg() -> SynthesisConfig {
    let mut cfg = SynthesisConfig::new(3, 12, 4, 10.0);
    cfg.center = Vec2::new(1.0, 0.0);
    cfg
}

// ---------------------------------------------------------------- SOS

#[test]
fn sos_encodings_match_definitions_exhaustively() {
    for kind in [SosKind::Sos1, SosKind::Sos2] {
        let smallest = if kind == SosKind::Sos1 { 1 } else { 2 };
        for m in smallest..=8 {
            for support in 0u32..1 << m {
                let vals: Vec<f64> = (0..m).map(|j| ((support >> j) & 1) as f64).collect();
                let expected = sos_satisfied(kind, &vals, 0.0);
                assert_eq!(
                    common::sos_support_feasible(kind, m, support),
                    expected,
                    "{kind:?} m={m} support={support:b}"
                );
            }
        }
    }
}

#[test]
fn sos1_member_two_of_four_forces_bits() {
    let mut ir = common::blank();
    let xs: Vec<usize> = (0..4)
        .map(|j| ir.continuous(format!("x{j}"), 0.0, 1.0, Tag::Box))
        .collect();
    encode_sos1(&mut ir, "s", &xs, Tag::Box);
    let (b1, b2) = (ir.id("s_bit0"), ir.id("s_bit1"));
    let admitted: Vec<(f64, f64)> = common::bit_patterns(2)
        .filter(|p| {
            let f = BTreeMap::from([(xs[2], 1.0), (b1, p[0]), (b2, p[1])]);
            common::lp_point(&ir, &f).is_some()
        })
        .map(|p| (p[0], p[1]))
        .collect();
    assert_eq!(admitted, vec![(1.0, 0.0)]);
}

#[test]
fn sos1_singleton_adds_nothing() {
    let mut ir = common::blank();
    let x = ir.continuous("x0", 0.0, 1.0, Tag::Box);
    let (v, r) = (ir.variables.len(), ir.linear_constraints.len());
    encode_sos1(&mut ir, "s", &[x], Tag::Box);
    assert_eq!((ir.variables.len(), ir.linear_constraints.len()), (v, r));
}

#[test]
fn sos2_examples() {
    let check = |w: [f64; 5]| {
        let support = w
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .fold(0u32, |acc, (j, _)| acc | 1 << j);
        common::sos_support_feasible(SosKind::Sos2, 5, support)
    };
    assert!(check([0.0, 0.5, 0.5, 0.0, 0.0]));
    assert!(!check([0.5, 0.0, 0.5, 0.0, 0.0]));
    assert!(check([0.0, 0.0, 1.0, 0.0, 0.0]));
}

// ------------------------------------------------------------ topology

#[test]
fn topological_fragment_matches_enumeration() {
    for k in 2..=3 {
        let expected = structure_set(enumerate_topologies(k).unwrap());
        assert_eq!(common::fragment_structures(k), expected, "K = {k}");
    }
}

#[test]
fn jansen_satisfies_topological_fragment() {
    let j = jansen_assignment();
    let cfg = SynthesisConfig::new(7, 3, 1, 1.0);
    let m = build_topological(&cfg);
    let mut x = vec![f64::NAN; m.variables.len()];
    topology_values(&m, &j, &mut x);
    assert_eq!(validate(&m, &x).unwrap().violations(), &[]);
}

// ------------------------------------------------------------ geometry

#[test]
fn traced_four_bar_satisfies_exact_model() {
    let cfg = four_bar_cfg();
    let m = build_geometric_exact(&cfg);
    let x = linkage_values(&m, &cfg, &common::four_bar()).unwrap();
    assert_eq!(validate(&m, &x).unwrap().violations(), &[]);
}

#[test]
fn perturbed_length_is_reported() {
    let cfg = four_bar_cfg();
    let m = build_geometric_exact(&cfg);
    let mut x = linkage_values(&m, &cfg, &common::four_bar()).unwrap();
    // stretch the first link of node 3 at sample 5 by 0.1 B along itself
    let (ix, iy) = (m.id(&names::dx(1, 3, 5)), m.id(&names::dy(1, 3, 5)));
    let d = Vec2::new(x[ix], x[iy]);
    let len = d.norm();
    let grown = d * ((len + 0.1 * cfg.box_side) / len);
    x[ix] = grown.x;
    x[iy] = grown.y;
    let report = validate(&m, &x).unwrap();
    let row = report
        .violations()
        .iter()
        .find(|r| r.name == "length1_3_5")
        .expect("length row violated");
    let expected = grown.norm_sq() - len * len;
    assert!(
        (row.raw - expected).abs() < 1e-9 * expected,
        "{} vs {expected}",
        row.raw
    );
}

#[test]
fn area_example_with_unit_links() {
    let mut cfg = SynthesisConfig::new(3, 3, 1, 4.0);
    cfg.epsilon = 0.1;
    let m = build_geometric_exact(&cfg);
    let c = m
        .quadratic_constraints
        .iter()
        .find(|c| c.name == "area_3_1")
        .unwrap();
    let mut x = vec![0.0; m.variables.len()];
    x[m.id(&names::dx(1, 3, 1))] = 1.0;
    x[m.id(&names::dy(2, 3, 1))] = -1.0;
    let lhs = model::eval_quadratic(&c.quad, &c.lin, &x);
    assert!((lhs - 1.0).abs() < 1e-15 && lhs >= cfg.epsilon);
}

#[test]
fn integrality_is_checked() {
    let cfg = four_bar_cfg();
    let m = build_exact(&cfg);
    let mut x = linkage_values(&m, &cfg, &common::four_bar()).unwrap();
    x[m.id(names::D)] = 0.5;
    let report = validate(&m, &x).unwrap();
    let r = report
        .violations()
        .iter()
        .find(|r| r.kind == ResidualKind::Integrality)
        .unwrap();
    assert_eq!((r.name.as_str(), r.raw), ("D", 0.5));
}

#[test]
fn missing_value_is_an_error() {
    let cfg = four_bar_cfg();
    let m = build_exact(&cfg);
    let x = vec![0.0; m.variables.len() - 1];
    assert!(validate(&m, &x).is_err());
}

#[test]
fn box_constraints_bind_non_end_effector_nodes() {
    let mut cfg = four_bar_cfg();
    cfg.boxes.push(BoxConstraint {
        region: linkforge::geometry::Aabb::new(Vec2::new(-2.0, -2.0), Vec2::new(4.0, 2.0)),
        applies_to: Default::default(),
    });
    let m = build_geometric_exact(&cfg);
    let x = linkage_values(&m, &cfg, &common::four_bar()).unwrap();
    assert!(validate(&m, &x).unwrap().is_satisfied());
    cfg.boxes[0].region = linkforge::geometry::Aabb::new(Vec2::new(2.0, -2.0), Vec2::new(4.0, 2.0));
    let m = build_geometric_exact(&cfg);
    let x = linkage_values(&m, &cfg, &common::four_bar()).unwrap();
    let report = validate(&m, &x).unwrap();
    assert!(
        report
            .violations()
            .iter()
            .all(|r| r.name.starts_with("box0_1_")),
        "only the motor leaves the box"
    );
    assert!(!report.is_satisfied());
}

// ---------------------------------------------------------- relaxations

#[test]
fn gap_law() {
    let b = 2.0;
    let mut prev = None;
    for s in [2, 4, 8, 16] {
        let g = max_overestimation_gap(b, s);
        let law = b * b / (4.0 * (s * s) as f64);
        assert!((g - law).abs() < 1e-9, "S = {s}: {g} vs {law}");
        if let Some(p) = prev {
            let ratio: f64 = p / g;
            assert!((ratio - 4.0).abs() < 1e-6);
        }
        prev = Some(g);
    }
}

#[test]
fn binary_counts_are_frozen() {
    let cfg = SynthesisConfig::new(7, 10, 8, 1.0);
    let micp = build_micp_relaxation(&cfg);
    let minlp = build_minlp(&cfg);
    let (a, b) = (
        micp.metadata.binaries.clone(),
        minlp.metadata.binaries.clone(),
    );
    assert_eq!(
        (a.topological, a.length_relaxation, a.sector, a.total),
        (34, 720, 240, 994)
    );
    assert_eq!((b.topological, b.block, b.total), (34, 72, 106));
    assert_eq!(a.total, micp.free_binaries());
    assert!((a.total as f64 - 1064.0).abs() <= 106.4);
    assert!((b.total as f64 - 98.0).abs() <= 9.8);
}

#[test]
fn binary_counts_follow_closed_form() {
    for (k, t, s) in [(3, 4, 2), (4, 6, 3), (5, 5, 4), (7, 10, 8), (6, 20, 8)] {
        let cfg = SynthesisConfig::new(k, t, s, 1.0);
        let lg = model::log2_ceil;
        let topo = (k - 2) + 1 + (2..=k).map(|i| 2 * lg(i)).sum::<usize>();
        let sp = cfg.sector_resolution();
        assert_eq!(build_topological(&cfg).free_binaries(), topo);
        assert_eq!(
            build_micp_relaxation(&cfg).free_binaries(),
            topo + 4 * t * (k - 1) * lg(s) + t * (k - 1) * lg(2 * sp)
        );
        assert_eq!(
            build_minlp(&cfg).free_binaries(),
            topo + 4 * (k - 1) * lg(s)
        );
    }
}

fn random_design(rng: &mut ChaCha8Rng) -> (Linkage, SynthesisConfig) {
    let n = [3, 4, 5][rand::Rng::random_range(rng, 0..3)];
    let l = random_linkage(rng, &PlantSpec::new(n, 6));
    let mut cfg = SynthesisConfig::new(5, 6, 3, 4.0);
    cfg.epsilon = 0.01;
    (l, cfg)
}

#[test]
fn micp_contains_exact_designs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut sector_misses = 0;
    for _ in 0..50 {
        let (l, cfg) = random_design(&mut rng);
        let exact = build_exact(&cfg);
        let xe = linkage_values(&exact, &cfg, &l).unwrap();
        assert!(validate(&exact, &xe).unwrap().is_satisfied());
        let micp = build_micp_relaxation(&cfg);
        let x = linkage_values(&micp, &cfg, &l).unwrap();
        let report = validate(&micp, &x).unwrap();
        for r in report.violations() {
            let tag = micp.linear_constraints.get(r.index).map(|c| c.tag);
            assert!(
                r.kind == ResidualKind::Linear && tag == Some(Tag::Sector),
                "non-sector violation {r:?}"
            );
        }
        sector_misses += usize::from(!report.is_satisfied());
    }
    // the sector system is an inner approximation; report how often it
    // excludes an exact design
    println!("designs excluded only by the sector rows: {sector_misses}/50");
}

#[test]
fn minlp_accepts_designs_with_block_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let (l, cfg) = random_design(&mut rng);
        let m = build_minlp(&cfg);
        let x = linkage_values(&m, &cfg, &l).unwrap();
        assert_eq!(validate(&m, &x).unwrap().violations(), &[]);
    }
}

#[test]
fn block_weights_cannot_leave_the_grid() {
    let cfg = four_bar_cfg();
    let m = build_minlp(&cfg);
    let mut x = linkage_values(&m, &cfg, &common::four_bar()).unwrap();
    // every convex combination of the breakpoints stays inside the grid, so
    // a link coordinate beyond B/2 contradicts the value row
    let v = m.id(&names::dx(1, 3, 1));
    x[v] = 0.6 * cfg.box_side;
    let report = validate(&m, &x).unwrap();
    assert!(report
        .violations()
        .iter()
        .any(|r| r.name == format!("block_val_{}", names::dx(1, 3, 1))));
    assert!(report
        .violations()
        .iter()
        .any(|r| r.kind == ResidualKind::Bound));
}

#[test]
fn coarse_relaxation_admits_unequal_lengths() {
    // with S = 1 the over-estimator is the chord over the whole range, so a
    // link may change length between samples
    let mut cfg = four_bar_cfg();
    cfg.s = 1;
    let micp = build_micp_relaxation(&cfg);
    let exact = build_minlp(&cfg);
    let l = common::four_bar();
    let mut x = linkage_values(&micp, &cfg, &l).unwrap();
    let (ix, iy) = (micp.id(&names::dx(1, 3, 2)), micp.id(&names::dy(1, 3, 2)));
    x[ix] *= 0.9;
    x[iy] *= 0.9;
    // keep the link equalities: shift node 3 and leave node 1 where it is
    let (nx, ny) = (micp.id(&names::nx(3, 2)), micp.id(&names::ny(3, 2)));
    let (px, py) = (x[micp.id(&names::nx(1, 2))], x[micp.id(&names::ny(1, 2))]);
    x[nx] = px + x[ix];
    x[ny] = py + x[iy];
    let (ex, ey) = (micp.id(&names::dx(2, 3, 2)), micp.id(&names::dy(2, 3, 2)));
    x[ex] = x[nx] - 3.0;
    x[ey] = x[ny];
    model::complete_relaxations(&micp, &cfg, &mut x);
    let on_micp = validate(&micp, &x).unwrap();
    assert!(
        on_micp
            .violations()
            .iter()
            .all(|r| micp.linear_constraints.get(r.index).map(|c| c.tag) == Some(Tag::Sector)),
        "{:?}",
        on_micp.violations()
    );
    let mut y = vec![f64::NAN; exact.variables.len()];
    for (i, v) in exact.variables.iter().enumerate() {
        if let Some(j) = micp.var_id(&v.name) {
            y[i] = x[j];
        }
    }
    model::complete_relaxations(&exact, &cfg, &mut y);
    let on_exact = validate(&exact, &y).unwrap();
    assert!(on_exact
        .violations()
        .iter()
        .any(|r| r.name.starts_with("length")));
}

#[test]
fn all_micp_quadratics_are_convex() {
    for (k, t, s) in [(3, 4, 2), (5, 6, 4)] {
        let m = build_micp_relaxation(&SynthesisConfig::new(k, t, s, 3.0));
        assert!(m
            .quadratic_constraints
            .iter()
            .all(|c| c.convex && model::is_psd(&c.quad, 1.0)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sector_rows_imply_area_margin(
        a1 in 0.0f64..std::f64::consts::TAU,
        a2 in 0.0f64..std::f64::consts::TAU,
        r1 in 0.01f64..1.0,
        r2 in 0.01f64..1.0,
        s in 1usize..12,
    ) {
        let tab = SectorTable::new(s.max(4), 0.05);
        let (d1, d2) = (Vec2::from_angle(a1) * r1, Vec2::from_angle(a2) * r2);
        for l in 0..tab.count {
            if tab.accepts(l, d1, d2, 0.0) {
                let area = d1.perp_cw().dot(d2);
                prop_assert!(area >= 0.05f64.sin() * r1 * r2 - 1e-12);
            }
        }
    }

    #[test]
    fn pwl_weights_overestimate(v in -1.0f64..1.0, s in 1usize..20) {
        let alpha = model::breakpoints(2.0, s);
        let (seg, th) = model::grid_segment(&alpha, v);
        let x = (1.0 - th) * alpha[seg] + th * alpha[seg + 1];
        let sq = (1.0 - th) * alpha[seg].powi(2) + th * alpha[seg + 1].powi(2);
        prop_assert!((x - v).abs() < 1e-12);
        prop_assert!(sq >= v * v - 1e-12);
        prop_assert!(sq - v * v <= 1.0 / (s * s) as f64 + 1e-12);
    }
}

// --------------------------------------------------------------- export

#[test]
fn json_round_trip_and_determinism() {
    let mut cfg = four_bar_cfg();
    cfg.mode = CurveMode::Fixed;
    cfg.target = Some(
        trace(&common::four_bar(), cfg.t)
            .unwrap()
            .end_effector()
            .to_vec(),
    );
    for m in [
        build_exact(&cfg),
        build_micp_relaxation(&cfg),
        build_minlp(&cfg),
    ] {
        let text = m.to_json();
        let back = ModelIR::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json(), text);
    }
    let a = model::export(
        &build_micp_relaxation(&cfg),
        ExportFormat::Lp,
        ExportOptions::default(),
    )
    .unwrap();
    let b = model::export(
        &build_micp_relaxation(&cfg),
        ExportFormat::Lp,
        ExportOptions::default(),
    )
    .unwrap();
    assert_eq!(a, b);
}

#[test]
fn lp_header_matches_metadata() {
    let cfg = SynthesisConfig::new(3, 4, 2, 2.0);
    let m = build_micp_relaxation(&cfg);
    let text = model::to_lp(&m, ExportOptions::default()).unwrap();
    for (tag, count) in &m.metadata.constraint_counts {
        assert!(
            text.contains(&format!("\\ constraints {tag:?} {count}\n")),
            "{tag:?}"
        );
    }
    let listed: usize = m.metadata.constraint_counts.values().sum();
    assert_eq!(
        listed,
        m.linear_constraints.len() + m.quadratic_constraints.len()
    );
    assert!(text.contains(&format!("total={}", m.metadata.binaries.total)));
}

#[test]
fn tracking_objective_vanishes_on_own_trace() {
    let mut cfg = four_bar_cfg();
    let l = common::four_bar();
    cfg.target = Some(trace(&l, cfg.t).unwrap().end_effector().to_vec());
    let m = build_exact(&cfg);
    let x = linkage_values(&m, &cfg, &l).unwrap();
    let val = model::eval_quadratic(&m.objective.quad, &m.objective.lin, &x) + m.objective.constant;
    assert!(val.abs() < 1e-9, "{val}");
    assert_eq!(m.metadata.kind, ModelKind::Exact);
}
