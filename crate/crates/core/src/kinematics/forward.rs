use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::linkage::{Linkage, MotorSpec, NodeKind, Orientation};
use crate::geometry::Vec2;

/// Safety margin on `|cos θ|` used when simulating a design, so that nodes
/// never sit exactly on a dead-center configuration.
pub const VALIDITY_MARGIN: f64 = 1e-6;

/// Which triangle inequality failed, and by how much.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "bound", rename_all = "camelCase")]
pub enum TriangleViolation {
    /// Parents are farther apart than the two links can reach.
    TooFar { excess: f64 },
    /// Parents are closer than the difference of the two links.
    TooClose { excess: f64 },
    /// Inside the triangle bounds but within the safety margin of a
    /// dead-center, or parents coincide.
    Degenerate { cos: f64 },
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum KinematicsError {
    #[error("node {node} unreachable at t = {t:.6}: {violation:?}")]
    Unreachable {
        node: usize,
        t: f64,
        violation: TriangleViolation,
    },
    #[error("node {node} is within the singular margin at t = {t:.6} (cos = {cos:.9})")]
    NearSingular { node: usize, t: f64, cos: f64 },
    #[error("linkage has trailing fixed nodes and cannot be simulated")]
    OpenLinkage,
    #[error("{0}")]
    Invalid(String),
}

/// Position of the motor node at parameter `t`.
pub fn motor_position(motor: &MotorSpec, t: f64) -> Vec2 {
    match motor {
        MotorSpec::Rotary {
            center,
            radius,
            direction,
        } => {
            let a = direction.sign() * t;
            Vec2::new(a.sin() * radius + center.x, a.cos() * radius + center.y)
        }
        MotorSpec::Linear { start, direction } => *start + *direction * t,
    }
}

/// Intermediate quantities of one law-of-cosine solve.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Triangle {
    pub pos: Vec2,
    pub cos: f64,
}

pub(crate) fn solve_triangle(
    nj: Vec2,
    nk: Vec2,
    lji: f64,
    lki: f64,
    sigma: f64,
    margin: f64,
) -> Result<Triangle, TriangleViolation> {
    let u = nk - nj;
    let d = u.norm();
    if d >= lji + lki {
        return Err(TriangleViolation::TooFar {
            excess: d - (lji + lki),
        });
    }
    if d <= (lji - lki).abs() {
        return Err(TriangleViolation::TooClose {
            excess: (lji - lki).abs() - d,
        });
    }
    let cos = (d * d + lji * lji - lki * lki) / (2.0 * d * lji);
    if !cos.is_finite() || cos.abs() > 1.0 - margin {
        return Err(TriangleViolation::Degenerate { cos });
    }
    let sin = (1.0 - cos * cos).sqrt();
    let e = u * (1.0 / d);
    let pos = nj + e * (lji * cos) + e.perp_cw() * (sigma * lji * sin);
    Ok(Triangle { pos, cos })
}

/// Place a node at distance `lji` from `nj` and `lki` from `nk`, on the side
/// selected by `sigma`. Fails unless the triangle inequality holds strictly.
pub fn law_of_cosine(
    nj: Vec2,
    nk: Vec2,
    lji: f64,
    lki: f64,
    sigma: Orientation,
) -> Result<Vec2, TriangleViolation> {
    solve_triangle(nj, nk, lji, lki, sigma.sign(), 0.0).map(|t| t.pos)
}

/// Positions of every node at parameter `t`, indexed from 0 (node 1 first).
pub fn forward_kinematics(linkage: &Linkage, t: f64) -> Result<Vec<Vec2>, KinematicsError> {
    forward_with_margin(linkage, t, VALIDITY_MARGIN).map(|v| v.into_iter().map(|s| s.pos).collect())
}

pub(crate) fn forward_with_margin(
    linkage: &Linkage,
    t: f64,
    margin: f64,
) -> Result<Vec<Triangle>, KinematicsError> {
    let mut out: Vec<Triangle> = Vec::with_capacity(linkage.len());
    for node in linkage.nodes() {
        let state = match &node.kind {
            NodeKind::Motor(m) => Triangle {
                pos: motor_position(m, t),
                cos: 0.0,
            },
            NodeKind::Fixed(p) => Triangle { pos: *p, cos: 0.0 },
            NodeKind::Movable(mv) => {
                let [j, k] = mv.parents;
                let nj = out[j - 1].pos;
                let nk = out[k - 1].pos;
                solve_triangle(
                    nj,
                    nk,
                    mv.lengths[0],
                    mv.lengths[1],
                    mv.orientation.sign(),
                    margin,
                )
                .map_err(|violation| KinematicsError::Unreachable {
                    node: node.index,
                    t,
                    violation,
                })?
            }
        };
        out.push(state);
    }
    Ok(out)
}

/// Uniform sample times `t_q = 2πq/T` for `q = 1..=T`.
pub fn sample_times(samples: usize) -> Vec<f64> {
    (1..=samples)
        .map(|q| std::f64::consts::TAU * q as f64 / samples as f64)
        .collect()
}

/// Node positions over a sweep of the motor parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `positions[i][q]` is node `i + 1` at `times[q]`.
    pub positions: Vec<Vec<Vec2>>,
}

impl Trajectory {
    pub fn node(&self, index: usize) -> &[Vec2] {
        &self.positions[index - 1]
    }

    pub fn end_effector(&self) -> &[Vec2] {
        self.positions.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Simulate the linkage at `samples` evenly spaced motor parameters.
pub fn trace(linkage: &Linkage, samples: usize) -> Result<Trajectory, KinematicsError> {
    trace_at(linkage, &sample_times(samples))
}

pub fn trace_at(linkage: &Linkage, times: &[f64]) -> Result<Trajectory, KinematicsError> {
    if linkage.has_trailing_fixed() {
        return Err(KinematicsError::OpenLinkage);
    }
    let mut positions = vec![Vec::with_capacity(times.len()); linkage.len()];
    for &t in times {
        for (i, p) in forward_kinematics(linkage, t)?.into_iter().enumerate() {
            positions[i].push(p);
        }
    }
    Ok(Trajectory {
        times: times.to_vec(),
        positions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::linkage::{NodeDef, Spin};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn rotary_motor_quarter_turns() {
        let m = MotorSpec::rotary(Vec2::new(1.0, 2.0), 0.5, Spin::Clockwise);
        assert_abs_diff_eq!(motor_position(&m, 0.0).x, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(motor_position(&m, 0.0).y, 2.5, epsilon = 1e-15);
        let p = motor_position(&m, FRAC_PI_2);
        assert_abs_diff_eq!(p.x, 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, 2.0, epsilon = 1e-15);
        let ccw = MotorSpec::rotary(Vec2::new(1.0, 2.0), 0.5, Spin::CounterClockwise);
        assert_abs_diff_eq!(motor_position(&ccw, FRAC_PI_2).x, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn linear_motor_moves_along_direction() {
        let m = MotorSpec::Linear {
            start: Vec2::new(1.0, 1.0),
            direction: Vec2::new(0.5, -1.0),
        };
        assert_eq!(motor_position(&m, 2.0), Vec2::new(2.0, -1.0));
    }

    #[test]
    fn isoceles_right_triangle() {
        let nj = Vec2::new(0.0, 0.0);
        let nk = Vec2::new(2.0, 0.0);
        let l = 2f64.sqrt();
        let p = law_of_cosine(nj, nk, l, l, Orientation::Positive).unwrap();
        assert_abs_diff_eq!(p.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, -1.0, epsilon = 1e-12);
        let q = law_of_cosine(nj, nk, l, l, Orientation::Negative).unwrap();
        assert_abs_diff_eq!(q.y, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn scalene_triangle_hand_computed() {
        // circles of radius 2.5 around (0,1) and (3,0); lower intersection
        let nj = Vec2::new(0.0, 1.0);
        let nk = Vec2::new(3.0, 0.0);
        let p = law_of_cosine(nj, nk, 2.5, 2.5, Orientation::Positive).unwrap();
        assert_abs_diff_eq!(p.x, 0.8876, epsilon = 1e-4);
        assert_abs_diff_eq!(p.y, -1.3371, epsilon = 1e-4);
        assert_abs_diff_eq!(p.distance(nj), 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.distance(nk), 2.5, epsilon = 1e-12);
    }

    #[test]
    fn triangle_violations_are_classified() {
        let o = Orientation::Positive;
        match law_of_cosine(Vec2::ZERO, Vec2::new(5.0, 0.0), 1.0, 1.0, o) {
            Err(TriangleViolation::TooFar { excess }) => assert_abs_diff_eq!(excess, 3.0),
            other => panic!("{other:?}"),
        }
        match law_of_cosine(Vec2::ZERO, Vec2::new(0.5, 0.0), 3.0, 1.0, o) {
            Err(TriangleViolation::TooClose { excess }) => assert_abs_diff_eq!(excess, 1.5),
            other => panic!("{other:?}"),
        }
        assert!(law_of_cosine(Vec2::ZERO, Vec2::ZERO, 1.0, 1.0, o).is_err());
    }

    #[test]
    fn four_bar_trace_keeps_link_lengths() {
        let l = Linkage::new(
            vec![
                NodeDef::motor(MotorSpec::rotary(Vec2::ZERO, 1.0, Spin::Clockwise)),
                NodeDef::fixed(2, Vec2::new(3.0, 0.0)),
                NodeDef::movable(3, [1, 2], [3.0, 2.5], Orientation::Negative),
            ],
            10.0,
        )
        .unwrap();
        let tr = trace(&l, 16).unwrap();
        assert_eq!(tr.times.len(), 16);
        assert_abs_diff_eq!(tr.times[7], PI, epsilon = 1e-15);
        for q in 0..16 {
            assert_abs_diff_eq!(tr.node(3)[q].distance(tr.node(1)[q]), 3.0, epsilon = 1e-12);
            assert_abs_diff_eq!(tr.node(3)[q].distance(tr.node(2)[q]), 2.5, epsilon = 1e-12);
            assert_eq!(tr.node(2)[q], Vec2::new(3.0, 0.0));
        }
    }

    #[test]
    fn motor_quarter_turn_samples() {
        let l =
            Linkage::motor_only(MotorSpec::rotary(Vec2::ZERO, 1.0, Spin::Clockwise), 4.0).unwrap();
        let tr = trace(&l, 4).unwrap();
        let expect = [(1.0, 0.0), (0.0, -1.0), (-1.0, 0.0), (0.0, 1.0)];
        for (p, (x, y)) in tr.node(1).iter().zip(expect) {
            assert_abs_diff_eq!(p.x, x, epsilon = 1e-15);
            assert_abs_diff_eq!(p.y, y, epsilon = 1e-15);
        }
    }

    #[test]
    fn unreachable_reports_node_and_time() {
        let l = Linkage::new(
            vec![
                NodeDef::motor(MotorSpec::rotary(Vec2::ZERO, 1.0, Spin::Clockwise)),
                NodeDef::fixed(2, Vec2::new(3.0, 0.0)),
                NodeDef::movable(3, [1, 2], [1.2, 1.2], Orientation::Positive),
            ],
            10.0,
        )
        .unwrap();
        match trace(&l, 8) {
            Err(KinematicsError::Unreachable { node: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
