use std::f64::consts::{PI, SQRT_2};

use super::config::{MotorKind, SynthesisConfig};
use super::ir::{BinaryCount, Metadata, ModelIR, ModelKind, Sense, Tag};
use super::names;
use super::sos::{encode_sos1, encode_sos2, log2_ceil};
use crate::geometry::Vec2;
use crate::kinematics::{sample_times, CurveMode};

fn metadata(cfg: &SynthesisConfig, kind: ModelKind) -> Metadata {
    Metadata {
        kind,
        k: cfg.k,
        t: cfg.t,
        s: cfg.s,
        box_side: cfg.box_side,
        epsilon: cfg.epsilon,
        lambda: cfg.lambda,
        binaries: BinaryCount::default(),
        binary_budget: binary_budget(cfg, kind),
        constraint_counts: Default::default(),
    }
}

/// Closed-form binary budget for a model kind:
/// `K⌈log K⌉` for the topology, plus `4TK⌈log S⌉ + TK⌈log 2S⌉` for the
/// MICP relaxation or `4K⌈log S⌉` for the MINLP blocks.
pub fn binary_budget(cfg: &SynthesisConfig, kind: ModelKind) -> usize {
    let (k, t) = (cfg.k, cfg.t);
    let topo = k * log2_ceil(k);
    match kind {
        ModelKind::Fragment | ModelKind::Exact => topo,
        ModelKind::Micp => topo + 4 * t * k * log2_ceil(cfg.s) + t * k * log2_ceil(2 * cfg.s),
        ModelKind::Minlp => topo + 4 * k * log2_ceil(cfg.s),
    }
}

fn finish(mut m: ModelIR) -> ModelIR {
    m.recount();
    let mut count = BinaryCount::default();
    for v in m.variables.iter().filter(|v| v.is_free_binary()) {
        match v.tag {
            Tag::PWLBound => count.length_relaxation += 1,
            Tag::Sector => count.sector += 1,
            Tag::InitBlock => count.block += 1,
            _ => count.topological += 1,
        }
    }
    count.total = m.free_binaries();
    m.metadata.binaries = count;
    m
}

/// Topology variables and the node usage, connectivity and flux rows, with
/// every parent selector family declared as an encoded SOS1 set.
pub fn build_topological(cfg: &SynthesisConfig) -> ModelIR {
    let mut m = ModelIR::new(metadata(cfg, ModelKind::Fragment));
    add_topological(&mut m, cfg);
    finish(m)
}

fn add_topological(m: &mut ModelIR, cfg: &SynthesisConfig) {
    let k = cfg.k;
    let kf = k as f64;
    for i in 1..=k {
        let u = m.binary(names::u(i), Tag::NodeUsage);
        if i == 1 || i == k {
            m.variables[u].lb = 1.0;
        }
        let f = m.continuous(names::f(i), 0.0, 1.0, Tag::NodeUsage);
        if i == 1 {
            m.variables[f].ub = 0.0;
        }
        m.linear(
            format!("usage_{i}"),
            vec![(u, 1.0), (f, 1.0)],
            Sense::Ge,
            1.0,
            Tag::NodeUsage,
        );
    }
    let dvar = m.binary(names::D, Tag::Motor);
    if cfg.motor == MotorKind::Linear {
        m.variables[dvar].ub = 0.0;
    }

    for i in 2..=k {
        let f = m.id(&names::f(i));
        for d in 1..=2 {
            let members: Vec<usize> = (0..i)
                .map(|j| m.continuous(names::c(d, j, i), 0.0, 1.0, Tag::NodeConnectivity))
                .collect();
            m.linear(
                format!("select{d}_{i}"),
                members.iter().map(|&x| (x, 1.0)).collect(),
                Sense::Eq,
                1.0,
                Tag::NodeConnectivity,
            );
            m.linear(
                format!("ground{d}_{i}"),
                vec![(members[0], 1.0), (f, -1.0)],
                Sense::Eq,
                0.0,
                Tag::NodeConnectivity,
            );
            for j in 1..i {
                let uj = m.id(&names::u(j));
                m.linear(
                    format!("parent_used{d}_{j}_{i}"),
                    vec![(members[j], 1.0), (uj, -1.0)],
                    Sense::Le,
                    0.0,
                    Tag::NodeConnectivity,
                );
            }
            encode_sos1(m, &names::c_set(d, i), &members, Tag::NodeConnectivity);
        }
        let mut two = vec![(f, 2.0)];
        for j in 1..i {
            let (a, b) = (m.id(&names::c(1, j, i)), m.id(&names::c(2, j, i)));
            m.linear(
                format!("distinct_{j}_{i}"),
                vec![(a, 1.0), (b, 1.0)],
                Sense::Le,
                1.0,
                Tag::NodeConnectivity,
            );
            two.push((a, 1.0));
            two.push((b, 1.0));
        }
        m.linear(
            format!("two_parents_{i}"),
            two,
            Sense::Eq,
            2.0,
            Tag::NodeConnectivity,
        );
    }

    for i in 2..=k {
        for j in 1..i {
            m.continuous(names::q(j, i), 0.0, kf, Tag::NoWaste);
            m.continuous(names::r(j, i), 0.0, kf, Tag::MovableNode);
        }
    }
    for i in 2..=k {
        for j in 1..i {
            let (c1, c2) = (m.id(&names::c(1, j, i)), m.id(&names::c(2, j, i)));
            let (q, r) = (m.id(&names::q(j, i)), m.id(&names::r(j, i)));
            m.linear(
                format!("q_link_{j}_{i}"),
                vec![(q, 1.0), (c1, -kf), (c2, -kf)],
                Sense::Le,
                0.0,
                Tag::NoWaste,
            );
            m.linear(
                format!("r_link_{j}_{i}"),
                vec![(r, 1.0), (c1, -kf), (c2, -kf)],
                Sense::Le,
                0.0,
                Tag::MovableNode,
            );
            let fj = m.id(&names::f(j));
            m.linear(
                format!("r_movable_{j}_{i}"),
                vec![(r, 1.0), (fj, kf)],
                Sense::Le,
                kf,
                Tag::MovableNode,
            );
        }
    }
    for i in 1..k {
        let mut terms = vec![(m.id(&names::u(i)), 1.0)];
        terms.extend((1..i).map(|j| (m.id(&names::q(j, i)), 1.0)));
        terms.extend((i + 1..=k).map(|l| (m.id(&names::q(i, l)), -1.0)));
        m.linear(
            format!("q_balance_{i}"),
            terms,
            Sense::Eq,
            0.0,
            Tag::NoWaste,
        );
    }
    for i in 2..=k {
        let mut terms = vec![(m.id(&names::f(i)), 1.0)];
        terms.extend((1..i).map(|j| (m.id(&names::r(j, i)), 1.0)));
        terms.extend((i + 1..=k).map(|l| (m.id(&names::r(i, l)), -1.0)));
        m.linear(
            format!("r_balance_{i}"),
            terms,
            Sense::Eq,
            1.0,
            Tag::MovableNode,
        );
    }
    objective_usage(m, cfg);
}

fn objective_usage(m: &mut ModelIR, cfg: &SynthesisConfig) {
    if cfg.lambda > 0.0 {
        for i in 1..=cfg.k {
            let u = m.id(&names::u(i));
            m.objective.lin.push((u, cfg.lambda));
        }
    }
}

/// Which parts of the exact geometric fragment to emit.
#[derive(Clone, Copy)]
struct GeometricParts {
    equal_length: bool,
    area: bool,
}

/// Positions, link vectors and motor variables with the exact discretized
/// geometry: gated link equalities, equal lengths across samples, fixed
/// node immobility, signed-area margins and the motor motion.
pub fn build_geometric_exact(cfg: &SynthesisConfig) -> ModelIR {
    let mut m = build_topological(cfg);
    m.metadata.kind = ModelKind::Fragment;
    add_geometric(
        &mut m,
        cfg,
        GeometricParts {
            equal_length: true,
            area: true,
        },
    );
    finish(m)
}

/// The full discretized model: topology plus exact geometry and the
/// tracking objective.
pub fn build_exact(cfg: &SynthesisConfig) -> ModelIR {
    let mut m = ModelIR::new(metadata(cfg, ModelKind::Exact));
    add_topological(&mut m, cfg);
    add_geometric(
        &mut m,
        cfg,
        GeometricParts {
            equal_length: true,
            area: true,
        },
    );
    add_tracking(&mut m, cfg);
    finish(m)
}

fn add_geometric(m: &mut ModelIR, cfg: &SynthesisConfig, parts: GeometricParts) {
    let (k, t) = (cfg.k, cfg.t);
    let b = cfg.box_side;
    let big = cfg.big_m();
    let ws = cfg.workspace();
    let half = b / 2.0;

    for i in 1..=k {
        for q in 1..=t {
            m.continuous(names::nx(i, q), ws.min.x, ws.max.x, Tag::Realizability);
            m.continuous(names::ny(i, q), ws.min.y, ws.max.y, Tag::Realizability);
        }
    }
    for i in 2..=k {
        for d in 1..=2 {
            for q in 1..=t {
                m.continuous(names::dx(d, i, q), -half, half, Tag::Realizability);
                m.continuous(names::dy(d, i, q), -half, half, Tag::Realizability);
            }
        }
    }

    // gated link equalities n_i - n_j = d_di when C^d_ji = 1
    for i in 2..=k {
        for d in 1..=2 {
            for j in 1..i {
                let c = m.id(&names::c(d, j, i));
                for q in 1..=t {
                    for (axis, ni, nj, dv) in [
                        ("x", names::nx(i, q), names::nx(j, q), names::dx(d, i, q)),
                        ("y", names::ny(i, q), names::ny(j, q), names::dy(d, i, q)),
                    ] {
                        let (ni, nj, dv) = (m.id(&ni), m.id(&nj), m.id(&dv));
                        m.linear(
                            format!("link{d}_{j}_{i}_{q}_{axis}_le"),
                            vec![(ni, 1.0), (nj, -1.0), (dv, -1.0), (c, big)],
                            Sense::Le,
                            big,
                            Tag::Realizability,
                        );
                        m.linear(
                            format!("link{d}_{j}_{i}_{q}_{axis}_ge"),
                            vec![(ni, 1.0), (nj, -1.0), (dv, -1.0), (c, -big)],
                            Sense::Ge,
                            -big,
                            Tag::Realizability,
                        );
                    }
                }
            }
        }
    }

    if parts.equal_length {
        for i in 2..=k {
            for d in 1..=2 {
                for q in 1..=t {
                    let p = q % t + 1;
                    let (ax, ay) = (m.id(&names::dx(d, i, q)), m.id(&names::dy(d, i, q)));
                    let (bx, by) = (m.id(&names::dx(d, i, p)), m.id(&names::dy(d, i, p)));
                    m.quadratic(
                        format!("length{d}_{i}_{q}"),
                        vec![(ax, ax, 1.0), (ay, ay, 1.0), (bx, bx, -1.0), (by, by, -1.0)],
                        vec![],
                        Sense::Eq,
                        0.0,
                        Tag::Realizability,
                    );
                }
            }
        }
    }

    // fixed nodes do not move: |n_i(q) - n_i(q+1)| <= M (1 - F_i)
    for i in 2..=k {
        let f = m.id(&names::f(i));
        for q in 1..=t {
            let p = q % t + 1;
            for (axis, a, c) in [
                ("x", names::nx(i, q), names::nx(i, p)),
                ("y", names::ny(i, q), names::ny(i, p)),
            ] {
                let (a, c) = (m.id(&a), m.id(&c));
                m.linear(
                    format!("still_{i}_{q}_{axis}_le"),
                    vec![(a, 1.0), (c, -1.0), (f, big)],
                    Sense::Le,
                    big,
                    Tag::Realizability,
                );
                m.linear(
                    format!("still_{i}_{q}_{axis}_ge"),
                    vec![(a, 1.0), (c, -1.0), (f, -big)],
                    Sense::Ge,
                    -big,
                    Tag::Realizability,
                );
            }
        }
    }

    if parts.area {
        for i in 2..=k {
            for q in 1..=t {
                let (ax, ay) = (m.id(&names::dx(1, i, q)), m.id(&names::dy(1, i, q)));
                let (bx, by) = (m.id(&names::dx(2, i, q)), m.id(&names::dy(2, i, q)));
                // perp_cw(d1) . d2 = d1y d2x - d1x d2y
                m.quadratic(
                    format!("area_{i}_{q}"),
                    vec![(ay, bx, 1.0), (ax, by, -1.0)],
                    vec![],
                    Sense::Ge,
                    cfg.epsilon,
                    Tag::Area,
                );
            }
        }
    }

    add_motor(m, cfg);
    add_boxes(m, cfg);
}

fn add_motor(m: &mut ModelIR, cfg: &SynthesisConfig) {
    let t = cfg.t;
    let ws = cfg.workspace();
    let half = cfg.box_side / 2.0;
    let big = cfg.big_m();
    let xc = m.continuous(names::XC, ws.min.x, ws.max.x, Tag::Motor);
    let yc = m.continuous(names::YC, ws.min.y, ws.max.y, Tag::Motor);
    let times = sample_times(t);
    match cfg.motor {
        MotorKind::Rotary => {
            for q in 1..=t {
                let mx = m.continuous(names::mx(q), -half, half, Tag::Motor);
                let my = m.continuous(names::my(q), -half, half, Tag::Motor);
                let (nx, ny) = (m.id(&names::nx(1, q)), m.id(&names::ny(1, q)));
                m.linear(
                    format!("offset_{q}_x"),
                    vec![(nx, 1.0), (xc, -1.0), (mx, -1.0)],
                    Sense::Eq,
                    0.0,
                    Tag::Motor,
                );
                m.linear(
                    format!("offset_{q}_y"),
                    vec![(ny, 1.0), (yc, -1.0), (my, -1.0)],
                    Sense::Eq,
                    0.0,
                    Tag::Motor,
                );
            }
            if cfg.mode == CurveMode::Arbitrary {
                return;
            }
            // the motor starts straight above its center
            let (mxt, myt) = (m.id(&names::mx(t)), m.id(&names::my(t)));
            m.linear("phase", vec![(mxt, 1.0)], Sense::Eq, 0.0, Tag::Motor);
            m.variables[myt].lb = 0.0;
            let dv = m.id(names::D);
            for q in 1..t {
                let (mx, my) = (m.id(&names::mx(q)), m.id(&names::my(q)));
                for (label, angle, gate) in
                    [("fwd", times[q - 1], 1.0), ("back", -times[q - 1], -1.0)]
                {
                    let (s, c) = angle.sin_cos();
                    // R(angle) m(q) - m(T), component-wise, gated by D or 1 - D
                    let rows = [
                        ("x", vec![(mx, c), (my, -s), (mxt, -1.0)]),
                        ("y", vec![(mx, s), (my, c), (myt, -1.0)]),
                    ];
                    for (axis, terms) in rows {
                        // |row| <= M D for the forward rotation, |row| <= M (1 - D) for the backward one
                        let (coef, rhs) = if gate > 0.0 { (-big, 0.0) } else { (big, big) };
                        let mut le = terms.clone();
                        le.push((dv, coef));
                        m.linear(
                            format!("spin_{label}_{q}_{axis}_le"),
                            le,
                            Sense::Le,
                            rhs,
                            Tag::Motor,
                        );
                        let mut ge = terms;
                        ge.push((dv, -coef));
                        m.linear(
                            format!("spin_{label}_{q}_{axis}_ge"),
                            ge,
                            Sense::Ge,
                            -rhs,
                            Tag::Motor,
                        );
                    }
                }
            }
        }
        MotorKind::Linear => {
            let reach = cfg.box_side / (2.0 * PI);
            let vx = m.continuous(names::VX, -reach, reach, Tag::Motor);
            let vy = m.continuous(names::VY, -reach, reach, Tag::Motor);
            for q in 1..=t {
                let tq = times[q - 1];
                let (nx, ny) = (m.id(&names::nx(1, q)), m.id(&names::ny(1, q)));
                m.linear(
                    format!("slide_{q}_x"),
                    vec![(nx, 1.0), (xc, -1.0), (vx, -tq)],
                    Sense::Eq,
                    0.0,
                    Tag::Motor,
                );
                m.linear(
                    format!("slide_{q}_y"),
                    vec![(ny, 1.0), (yc, -1.0), (vy, -tq)],
                    Sense::Eq,
                    0.0,
                    Tag::Motor,
                );
            }
        }
    }
}

fn add_boxes(m: &mut ModelIR, cfg: &SynthesisConfig) {
    use super::config::NodeClass;
    let big = cfg.big_m();
    for (bi, bx) in cfg.boxes.iter().enumerate() {
        for i in 1..cfg.k {
            let f = m.id(&names::f(i));
            // relaxation coefficient on F_i: 0 for all nodes, otherwise the
            // row is switched off for the other class
            let (fc, off) = match bx.applies_to {
                NodeClass::All => (0.0, 0.0),
                NodeClass::Fixed => (-big, -big),
                NodeClass::Movable => (big, 0.0),
            };
            for q in 1..=cfg.t {
                for (axis, v, lo, hi) in [
                    ("x", names::nx(i, q), bx.region.min.x, bx.region.max.x),
                    ("y", names::ny(i, q), bx.region.min.y, bx.region.max.y),
                ] {
                    let v = m.id(&v);
                    // lower: v + fc' F >= lo + off'   with the gate relaxing by M
                    m.linear(
                        format!("box{bi}_{i}_{q}_{axis}_lo"),
                        vec![(v, 1.0), (f, fc)],
                        Sense::Ge,
                        lo + off,
                        Tag::Box,
                    );
                    m.linear(
                        format!("box{bi}_{i}_{q}_{axis}_hi"),
                        vec![(v, 1.0), (f, -fc)],
                        Sense::Le,
                        hi - off,
                        Tag::Box,
                    );
                }
            }
        }
    }
}

fn add_tracking(m: &mut ModelIR, cfg: &SynthesisConfig) {
    let Some(target) = &cfg.target else { return };
    let w = 2.0 * PI / cfg.t as f64;
    for (q, s) in target.iter().enumerate() {
        let (x, y) = (
            m.id(&names::nx(cfg.k, q + 1)),
            m.id(&names::ny(cfg.k, q + 1)),
        );
        m.objective.quad.push((x, x, w));
        m.objective.quad.push((y, y, w));
        m.objective.lin.push((x, -2.0 * w * s.x));
        m.objective.lin.push((y, -2.0 * w * s.y));
        m.objective.constant += w * s.norm_sq();
    }
}

/// Breakpoints `α_s = sB/S − B/2` for `s = 0..=S`.
pub fn breakpoints(box_side: f64, s: usize) -> Vec<f64> {
    (0..=s)
        .map(|i| i as f64 * box_side / s as f64 - box_side / 2.0)
        .collect()
}

/// Largest gap between the piecewise-linear chord and `x²` over the grid,
/// measured by dense sampling of each segment.
pub fn max_overestimation_gap(box_side: f64, s: usize) -> f64 {
    let a = breakpoints(box_side, s);
    let mut worst = 0.0f64;
    for w in a.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        for k in 0..=1000 {
            let th = k as f64 / 1000.0;
            let x = lo + th * (hi - lo);
            let chord = (1.0 - th) * lo * lo + th * hi * hi;
            worst = worst.max(chord - x * x);
        }
    }
    worst
}

/// Unit normals of the sector relaxation of the area constraint.
///
/// There are `2S'` sectors with `S' = max(S, 4)`; sector `l` covers link
/// directions in `[lπ/S', lπ/S' + 2π/S']`, so consecutive sectors overlap by
/// half and every direction is covered twice.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorTable {
    pub count: usize,
    pub margin: f64,
    /// Start angle of every sector.
    pub start: Vec<f64>,
    /// Inward normal of the first edge.
    pub left: Vec<Vec2>,
    /// Outward normal of the second edge.
    pub right: Vec<Vec2>,
    /// `R(−margin)·left`, bounds the second link on one side.
    pub left_rotated: Vec<Vec2>,
    /// `R(π + margin)·right`, bounds the second link on the other side.
    pub right_rotated: Vec<Vec2>,
}

impl SectorTable {
    pub fn new(resolution: usize, margin: f64) -> Self {
        let sp = resolution as f64;
        let count = 2 * resolution;
        let start: Vec<f64> = (0..count).map(|l| l as f64 * PI / sp).collect();
        let left: Vec<Vec2> = start
            .iter()
            .map(|&a| Vec2::from_angle(a + PI / 2.0))
            .collect();
        let right: Vec<Vec2> = start
            .iter()
            .map(|&a| Vec2::from_angle(a + 2.0 * PI / sp + PI / 2.0))
            .collect();
        let left_rotated = left.iter().map(|v| v.rotate(-margin)).collect();
        let right_rotated = right.iter().map(|v| v.rotate(PI + margin)).collect();
        SectorTable {
            count,
            margin,
            start,
            left,
            right,
            left_rotated,
            right_rotated,
        }
    }

    pub fn for_config(cfg: &SynthesisConfig) -> Self {
        SectorTable::new(cfg.sector_resolution(), cfg.angular_margin())
    }

    /// Whether `(d1, d2)` satisfies the rows of sector `l` with selector 1.
    pub fn accepts(&self, l: usize, d1: Vec2, d2: Vec2, tol: f64) -> bool {
        self.left[l].dot(d1) >= -tol
            && self.right[l].dot(d1) <= tol
            && self.left_rotated[l].dot(d2) <= tol
            && self.right_rotated[l].dot(d2) >= -tol
    }

    /// First sector that accepts the pair, if any.
    pub fn find(&self, d1: Vec2, d2: Vec2) -> Option<usize> {
        (0..self.count).find(|&l| self.accepts(l, d1, d2, 0.0))
    }
}

/// MICP relaxation: topology, convex geometry rows, piecewise-linear
/// over-estimators of every squared link coordinate with relaxed equal
/// lengths, and the sector system in place of the area rows.
pub fn build_micp_relaxation(cfg: &SynthesisConfig) -> ModelIR {
    let mut m = ModelIR::new(metadata(cfg, ModelKind::Micp));
    add_topological(&mut m, cfg);
    add_geometric(
        &mut m,
        cfg,
        GeometricParts {
            equal_length: false,
            area: false,
        },
    );
    add_pwl(&mut m, cfg);
    add_sectors(&mut m, cfg);
    add_tracking(&mut m, cfg);
    finish(m)
}

fn add_pwl(m: &mut ModelIR, cfg: &SynthesisConfig) {
    let (k, t, s) = (cfg.k, cfg.t, cfg.s);
    let alpha = breakpoints(cfg.box_side, s);
    let top = cfg.box_side * cfg.box_side / 4.0;
    for i in 2..=k {
        for d in 1..=2 {
            for q in 1..=t {
                for coord in [names::dx(d, i, q), names::dy(d, i, q)] {
                    let v = m.id(&coord);
                    let sq = m.continuous(names::square(&coord), 0.0, top, Tag::PWLBound);
                    let w: Vec<usize> = (0..=s)
                        .map(|j| m.continuous(names::weight(&coord, j), 0.0, 1.0, Tag::PWLBound))
                        .collect();
                    m.linear(
                        format!("pwl_sum_{coord}"),
                        w.iter().map(|&x| (x, 1.0)).collect(),
                        Sense::Eq,
                        1.0,
                        Tag::PWLBound,
                    );
                    let mut val = vec![(v, 1.0)];
                    val.extend(w.iter().zip(&alpha).map(|(&x, &a)| (x, -a)));
                    m.linear(
                        format!("pwl_val_{coord}"),
                        val,
                        Sense::Eq,
                        0.0,
                        Tag::PWLBound,
                    );
                    let mut sqr = vec![(sq, 1.0)];
                    sqr.extend(w.iter().zip(&alpha).map(|(&x, &a)| (x, -a * a)));
                    m.linear(
                        format!("pwl_sq_{coord}"),
                        sqr,
                        Sense::Eq,
                        0.0,
                        Tag::PWLBound,
                    );
                    encode_sos2(m, &names::pwl_set(&coord), &w, Tag::PWLBound);
                }
            }
            for q in 1..=t {
                for p in [q % t + 1, (q + t - 2) % t + 1] {
                    let (ax, ay) = (m.id(&names::dx(d, i, q)), m.id(&names::dy(d, i, q)));
                    let sx = m.id(&names::square(&names::dx(d, i, p)));
                    let sy = m.id(&names::square(&names::dy(d, i, p)));
                    m.quadratic(
                        format!("length_relaxed{d}_{i}_{q}_{p}"),
                        vec![(ax, ax, 1.0), (ay, ay, 1.0)],
                        vec![(sx, -1.0), (sy, -1.0)],
                        Sense::Le,
                        0.0,
                        Tag::PWLBound,
                    );
                }
            }
        }
    }
}

fn add_sectors(m: &mut ModelIR, cfg: &SynthesisConfig) {
    let table = SectorTable::for_config(cfg);
    let big = SQRT_2 * cfg.box_side;
    for i in 2..=cfg.k {
        for q in 1..=cfg.t {
            let (ax, ay) = (m.id(&names::dx(1, i, q)), m.id(&names::dy(1, i, q)));
            let (bx, by) = (m.id(&names::dx(2, i, q)), m.id(&names::dy(2, i, q)));
            let g: Vec<usize> = (0..table.count)
                .map(|l| m.continuous(names::gamma(i, q, l), 0.0, 1.0, Tag::Sector))
                .collect();
            m.linear(
                format!("sector_sum_{i}_{q}"),
                g.iter().map(|&x| (x, 1.0)).collect(),
                Sense::Eq,
                1.0,
                Tag::Sector,
            );
            for (l, &gl) in g.iter().enumerate() {
                let rows = [
                    ("l1", ax, ay, table.left[l], Sense::Ge),
                    ("r1", ax, ay, table.right[l], Sense::Le),
                    ("l2", bx, by, table.left_rotated[l], Sense::Le),
                    ("r2", bx, by, table.right_rotated[l], Sense::Ge),
                ];
                for (label, x, y, n, sense) in rows {
                    // <n, d> >= -M (1 - γ)   or   <n, d> <= M (1 - γ)
                    let (gc, rhs) = match sense {
                        Sense::Ge => (-big, -big),
                        _ => (big, big),
                    };
                    m.linear(
                        format!("sector_{label}_{i}_{q}_{l}"),
                        vec![(x, n.x), (y, n.y), (gl, gc)],
                        sense,
                        rhs,
                        Tag::Sector,
                    );
                }
            }
            encode_sos1(m, &names::sector_set(i, q), &g, Tag::Sector);
        }
    }
}

/// MINLP model: topology, exact geometry, and at the first sample a block
/// selection that places every link vector in one cell of the `S×S` grid.
pub fn build_minlp(cfg: &SynthesisConfig) -> ModelIR {
    let mut m = ModelIR::new(metadata(cfg, ModelKind::Minlp));
    add_topological(&mut m, cfg);
    add_geometric(
        &mut m,
        cfg,
        GeometricParts {
            equal_length: true,
            area: true,
        },
    );
    add_blocks(&mut m, cfg);
    add_tracking(&mut m, cfg);
    finish(m)
}

fn add_blocks(m: &mut ModelIR, cfg: &SynthesisConfig) {
    let alpha = breakpoints(cfg.box_side, cfg.s);
    for i in 2..=cfg.k {
        for d in 1..=2 {
            for coord in [names::dx(d, i, 1), names::dy(d, i, 1)] {
                let v = m.id(&coord);
                let w: Vec<usize> = (0..=cfg.s)
                    .map(|j| m.continuous(names::block(&coord, j), 0.0, 1.0, Tag::InitBlock))
                    .collect();
                m.linear(
                    format!("block_sum_{coord}"),
                    w.iter().map(|&x| (x, 1.0)).collect(),
                    Sense::Eq,
                    1.0,
                    Tag::InitBlock,
                );
                let mut val = vec![(v, 1.0)];
                val.extend(w.iter().zip(&alpha).map(|(&x, &a)| (x, -a)));
                m.linear(
                    format!("block_val_{coord}"),
                    val,
                    Sense::Eq,
                    0.0,
                    Tag::InitBlock,
                );
                encode_sos2(m, &names::block_set(&coord), &w, Tag::InitBlock);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn breakpoint_grid() {
        assert_eq!(breakpoints(2.0, 4), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn chord_example() {
        let a = breakpoints(2.0, 4);
        let w = [0.0, 0.0, 0.5, 0.5, 0.0];
        let x: f64 = a.iter().zip(&w).map(|(a, w)| a * w).sum();
        let xs: f64 = a.iter().zip(&w).map(|(a, w)| a * a * w).sum();
        assert!((x - 0.25).abs() < 1e-15 && (xs - 0.125).abs() < 1e-15);
        assert!(xs >= x * x);
    }

    #[test]
    fn sector_table_is_unit_and_double_covering() {
        let tab = SectorTable::new(4, 0.05);
        assert_eq!(tab.count, 8);
        for v in tab
            .left
            .iter()
            .chain(&tab.right)
            .chain(&tab.left_rotated)
            .chain(&tab.right_rotated)
        {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        for k in 0..720 {
            let th = k as f64 * PI / 360.0 + 1e-3;
            let d = Vec2::from_angle(th);
            let covering = (0..tab.count)
                .filter(|&l| tab.left[l].dot(d) >= -1e-12 && tab.right[l].dot(d) <= 1e-12)
                .count();
            assert!(covering >= 2, "direction {th} covered {covering} times");
        }
    }

    #[test]
    fn all_relaxed_rows_are_convex() {
        let cfg = SynthesisConfig::new(4, 5, 3, 2.0);
        let m = build_micp_relaxation(&cfg);
        assert!(m.quadratic_constraints.iter().all(|c| c.convex));
        assert!(m.check_references().is_ok());
    }

    #[test]
    fn two_slot_bounds() {
        let m = build_topological(&SynthesisConfig::new(2, 3, 1, 1.0));
        let u1 = &m.variables[m.id("U_1")];
        let u2 = &m.variables[m.id("U_2")];
        let f1 = &m.variables[m.id("F_1")];
        assert_eq!((u1.lb, u2.lb, f1.ub), (1.0, 1.0, 0.0));
    }
}
