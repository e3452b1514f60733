//! Random valid linkages. Tracing one gives a target curve that is known
//! to be reachable with zero tracking error, which makes it a convenient
//! oracle for the solvers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Vec2;
use crate::kinematics::{
    signed_area, trace, Linkage, MotorSpec, NodeDef, NodeKind, Orientation, Spin, TargetCurve,
    Trajectory,
};
use crate::topology::{assignment_from_linkage, flux_feasible};

/// Parameters of the random generator.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantSpec {
    /// Total node count, motor and end-effector included.
    pub nodes: usize,
    /// Samples the linkage must trace without error.
    pub samples: usize,
    /// All node positions stay in `[-extent, extent]²`.
    pub extent: f64,
    /// Smallest allowed selector-order signed area, relative to `extent²`.
    pub min_area: f64,
    /// Chance that a non-final node is fixed rather than movable.
    pub fixed_probability: f64,
}

impl PlantSpec {
    pub fn new(nodes: usize, samples: usize) -> Self {
        PlantSpec {
            nodes,
            samples,
            extent: 1.0,
            min_area: 0.02,
            fixed_probability: 0.4,
        }
    }
}

/// Smallest selector-order signed area over all movable nodes and samples;
/// infinite when there are no movable nodes.
pub fn min_area(linkage: &Linkage, traj: &Trajectory) -> f64 {
    let mut worst = f64::INFINITY;
    for node in linkage.nodes() {
        let NodeKind::Movable(m) = &node.kind else {
            continue;
        };
        let (pi, pj, pk) = (
            traj.node(node.index),
            traj.node(m.parents[0]),
            traj.node(m.parents[1]),
        );
        for q in 0..traj.times.len() {
            let a = m.orientation.sign() * signed_area(pi[q] - pj[q], pi[q] - pk[q]);
            worst = worst.min(a);
        }
    }
    worst
}

/// Draw a linkage with `spec.nodes` nodes that traces all samples, keeps
/// every node inside the extent and keeps every triangle away from
/// degeneracy, with every node influencing the end-effector. Node 2 is
/// always fixed, the last node is always movable,
/// so two-node designs do not exist.
pub fn random_linkage<R: Rng + ?Sized>(rng: &mut R, spec: &PlantSpec) -> Linkage {
    assert!(spec.nodes >= 1, "a linkage has at least a motor");
    assert!(
        spec.nodes != 2,
        "node 2 has only one lower node and cannot move, so it cannot be the end-effector"
    );
    let e = spec.extent;
    let box_side = 4.0 * e;
    loop {
        let center = Vec2::new(
            rng.random_range(-0.5 * e..0.5 * e),
            rng.random_range(-0.5 * e..0.5 * e),
        );
        let radius = rng.random_range(0.15 * e..0.45 * e);
        let spin = if rng.random_bool(0.5) {
            Spin::Clockwise
        } else {
            Spin::CounterClockwise
        };
        let mut nodes = vec![NodeDef::motor(MotorSpec::rotary(center, radius, spin))];
        // positions of every node at t = 0
        let mut at_zero = vec![center + Vec2::new(0.0, radius)];
        let mut ok = true;
        for index in 2..=spec.nodes {
            let last = index == spec.nodes;
            let fixed = index == 2 || (!last && rng.random_bool(spec.fixed_probability));
            let p = Vec2::new(rng.random_range(-e..e), rng.random_range(-e..e));
            if fixed {
                nodes.push(NodeDef::fixed(index, p));
                at_zero.push(p);
                continue;
            }
            let j = rng.random_range(1..index);
            let mut k = rng.random_range(1..index - 1);
            if k >= j {
                k += 1;
            }
            let (pj, pk) = (at_zero[j - 1], at_zero[k - 1]);
            let area = signed_area(p - pj, p - pk);
            if area.abs() < 1e-9 {
                ok = false;
                break;
            }
            let orientation = Orientation::from_sign(area);
            nodes.push(NodeDef::movable(
                index,
                [j, k],
                [p.distance(pj), p.distance(pk)],
                orientation,
            ));
            at_zero.push(p);
        }
        if !ok {
            continue;
        }
        let Ok(linkage) = Linkage::new(nodes, box_side) else {
            continue;
        };
        if accept(&linkage, spec) {
            return linkage;
        }
    }
}

fn accept(linkage: &Linkage, spec: &PlantSpec) -> bool {
    // check a denser sampling than requested so the design is valid
    // between samples too
    let dense = spec.samples.max(64);
    let Ok(traj) = trace(linkage, dense) else {
        return false;
    };
    let Ok(coarse) = trace(linkage, spec.samples) else {
        return false;
    };
    let inside = traj
        .positions
        .iter()
        .flatten()
        .all(|p| p.x.abs() <= spec.extent && p.y.abs() <= spec.extent);
    let moves = traj
        .end_effector()
        .iter()
        .any(|p| p.distance(traj.end_effector()[0]) > 0.05 * spec.extent);
    let wired = linkage.len() == 1
        || assignment_from_linkage(linkage, linkage.len())
            .map(|a| flux_feasible(&a).feasible())
            .unwrap_or(false);
    wired
        && inside
        && moves
        && min_area(linkage, &coarse) >= spec.min_area * spec.extent * spec.extent
}

/// Target curve traced by the end-effector of `linkage` at `samples`
/// samples.
pub fn planted_target(linkage: &Linkage, samples: usize) -> TargetCurve {
    let traj = trace(linkage, samples).expect("planted linkage traces");
    TargetCurve::new(traj.end_effector().to_vec(), Default::default()).expect("finite samples")
}

/// `count` designs drawn in sequence from one stream seeded with `seed`.
pub fn planted_set(spec: &PlantSpec, count: usize, seed: u64) -> Vec<Linkage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_linkage(&mut rng, spec)).collect()
}
