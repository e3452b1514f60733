use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::curve::TargetCurve;
use super::forward::{
    forward_with_margin, sample_times, KinematicsError, Triangle, VALIDITY_MARGIN,
};
use super::linkage::{Linkage, LinkageError, MotorSpec, NodeKind};
use super::objective::matching;
use crate::geometry::Vec2;

/// Default guard on `|cos θ|` for derivative evaluation. Close to a
/// dead-center the sensitivity of a node to its link lengths blows up.
pub const SINGULAR_MARGIN: f64 = 1e-4;

/// One continuous design parameter of a linkage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "param", content = "node", rename_all = "camelCase")]
pub enum Param {
    MotorCenterX,
    MotorCenterY,
    MotorRadius,
    LinearStartX,
    LinearStartY,
    LinearDirX,
    LinearDirY,
    FixedX(usize),
    FixedY(usize),
    LengthJ(usize),
    LengthK(usize),
}

/// Parameter order: motor first, then each later node in index order.
pub fn parameter_layout(linkage: &Linkage) -> Vec<Param> {
    let mut out = Vec::new();
    for node in linkage.nodes() {
        match &node.kind {
            NodeKind::Motor(MotorSpec::Rotary { .. }) => {
                out.extend([Param::MotorCenterX, Param::MotorCenterY, Param::MotorRadius])
            }
            NodeKind::Motor(MotorSpec::Linear { .. }) => out.extend([
                Param::LinearStartX,
                Param::LinearStartY,
                Param::LinearDirX,
                Param::LinearDirY,
            ]),
            NodeKind::Fixed(_) => {
                out.extend([Param::FixedX(node.index), Param::FixedY(node.index)])
            }
            NodeKind::Movable(_) => {
                out.extend([Param::LengthJ(node.index), Param::LengthK(node.index)])
            }
        }
    }
    out
}

pub fn parameters(linkage: &Linkage) -> Vec<f64> {
    let mut out = Vec::new();
    for node in linkage.nodes() {
        match &node.kind {
            NodeKind::Motor(MotorSpec::Rotary { center, radius, .. }) => {
                out.extend([center.x, center.y, *radius])
            }
            NodeKind::Motor(MotorSpec::Linear { start, direction }) => {
                out.extend([start.x, start.y, direction.x, direction.y])
            }
            NodeKind::Fixed(p) => out.extend([p.x, p.y]),
            NodeKind::Movable(m) => out.extend(m.lengths),
        }
    }
    out
}

/// Copy of `linkage` with parameters replaced by `values` (same layout as
/// [`parameters`]). Structural validity is re-checked.
pub fn with_parameters(linkage: &Linkage, values: &[f64]) -> Result<Linkage, LinkageError> {
    let mut nodes = linkage.nodes().to_vec();
    let mut it = values.iter().copied();
    let mut next = || it.next().expect("parameter vector too short");
    for node in &mut nodes {
        match &mut node.kind {
            NodeKind::Motor(MotorSpec::Rotary { center, radius, .. }) => {
                *center = Vec2::new(next(), next());
                *radius = next();
            }
            NodeKind::Motor(MotorSpec::Linear { start, direction }) => {
                *start = Vec2::new(next(), next());
                *direction = Vec2::new(next(), next());
            }
            NodeKind::Fixed(p) => *p = Vec2::new(next(), next()),
            NodeKind::Movable(m) => m.lengths = [next(), next()],
        }
    }
    Linkage::new_open(nodes, linkage.box_side())
}

/// Tracking error and its derivative with respect to [`parameters`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// Gradient of the tracking term by a reverse sweep over the node order.
///
/// In arbitrary-order mode the optimal matching is held fixed, which gives
/// the derivative almost everywhere.
pub fn jacobian_adjoint(
    linkage: &Linkage,
    target: &TargetCurve,
) -> Result<Gradient, KinematicsError> {
    jacobian_adjoint_with_margin(linkage, target, SINGULAR_MARGIN)
}

pub fn jacobian_adjoint_with_margin(
    linkage: &Linkage,
    target: &TargetCurve,
    margin: f64,
) -> Result<Gradient, KinematicsError> {
    if linkage.has_trailing_fixed() {
        return Err(KinematicsError::OpenLinkage);
    }
    let times = sample_times(target.len());
    let mut states = Vec::with_capacity(times.len());
    for &t in &times {
        let s = forward_with_margin(linkage, t, VALIDITY_MARGIN)?;
        for (i, tri) in s.iter().enumerate() {
            if linkage.nodes()[i].as_movable().is_some() && tri.cos.abs() > 1.0 - margin {
                return Err(KinematicsError::NearSingular {
                    node: i + 1,
                    t,
                    cos: tri.cos,
                });
            }
        }
        states.push(s);
    }
    let ee: Vec<Vec2> = states.iter().map(|s| s.last().unwrap().pos).collect();
    let m = matching(&ee, target);
    let w = std::f64::consts::TAU / target.len() as f64;

    let layout_offsets = offsets(linkage);
    let mut grad = vec![0.0; layout_offsets.1];
    let mut value = 0.0;
    let mut adj = vec![Vec2::ZERO; linkage.len()];
    for (q, s) in states.iter().enumerate() {
        let r = ee[q] - target.samples()[m[q]];
        value += w * r.norm_sq();
        adj.iter_mut().for_each(|a| *a = Vec2::ZERO);
        *adj.last_mut().unwrap() = r * (2.0 * w);
        backward(linkage, s, times[q], &mut adj, &layout_offsets.0, &mut grad);
    }
    Ok(Gradient { value, grad })
}

fn offsets(linkage: &Linkage) -> (Vec<usize>, usize) {
    let mut off = Vec::with_capacity(linkage.len());
    let mut n = 0;
    for node in linkage.nodes() {
        off.push(n);
        n += match &node.kind {
            NodeKind::Motor(MotorSpec::Rotary { .. }) => 3,
            NodeKind::Motor(MotorSpec::Linear { .. }) => 4,
            _ => 2,
        };
    }
    (off, n)
}

fn backward(
    linkage: &Linkage,
    s: &[Triangle],
    t: f64,
    adj: &mut [Vec2],
    off: &[usize],
    grad: &mut [f64],
) {
    for (i, node) in linkage.nodes().iter().enumerate().rev() {
        let a = adj[i];
        if a == Vec2::ZERO {
            continue;
        }
        let o = off[i];
        match &node.kind {
            NodeKind::Movable(mv) => {
                let [j, k] = mv.parents;
                let d1 = s[i].pos - s[j - 1].pos;
                let d2 = s[i].pos - s[k - 1].pos;
                // A = [d1ᵀ; d2ᵀ], solve Aᵀ y = a
                let det = d1.x * d2.y - d1.y * d2.x;
                let y0 = (d2.y * a.x - d2.x * a.y) / det;
                let y1 = (-d1.y * a.x + d1.x * a.y) / det;
                grad[o] += y0 * mv.lengths[0];
                grad[o + 1] += y1 * mv.lengths[1];
                adj[j - 1] += d1 * y0;
                adj[k - 1] += d2 * y1;
            }
            NodeKind::Fixed(_) => {
                grad[o] += a.x;
                grad[o + 1] += a.y;
            }
            NodeKind::Motor(MotorSpec::Rotary { direction, .. }) => {
                let (sn, cs) = (direction.sign() * t).sin_cos();
                grad[o] += a.x;
                grad[o + 1] += a.y;
                grad[o + 2] += a.x * sn + a.y * cs;
            }
            NodeKind::Motor(MotorSpec::Linear { .. }) => {
                grad[o] += a.x;
                grad[o + 1] += a.y;
                grad[o + 2] += a.x * t;
                grad[o + 3] += a.y * t;
            }
        }
    }
}

/// Twice the signed triangle area spanned by `d1 = n_i − n_j` and
/// `d2 = n_i − n_k`, measured as `⟨perp_cw(d1), d2⟩`.
pub fn signed_area(d1: Vec2, d2: Vec2) -> f64 {
    d1.perp_cw().dot(d2)
}

/// Determinant of the Jacobian of the kinematic constraint system with
/// respect to the positions of all moving nodes at parameter `t`.
///
/// The motor contributes an identity block; each movable node `i` with
/// parents `j, k` contributes rows `2(n_i − n_j)ᵀ` and `2(n_i − n_k)ᵀ`.
pub fn kinematic_jacobian_det(linkage: &Linkage, t: f64) -> Result<f64, KinematicsError> {
    let s = forward_with_margin(linkage, t, 0.0)?;
    let moving: Vec<usize> = (0..linkage.len())
        .filter(|&i| !linkage.nodes()[i].is_fixed())
        .collect();
    let mut col = vec![usize::MAX; linkage.len()];
    for (c, &i) in moving.iter().enumerate() {
        col[i] = c;
    }
    let n = 2 * moving.len();
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for (b, &i) in moving.iter().enumerate() {
        let r = 2 * b;
        match &linkage.nodes()[i].kind {
            NodeKind::Motor(_) => {
                jac[(r, r)] = 1.0;
                jac[(r + 1, r + 1)] = 1.0;
            }
            NodeKind::Movable(mv) => {
                for (row, &p) in mv.parents.iter().enumerate() {
                    let d = s[i].pos - s[p - 1].pos;
                    jac[(r + row, 2 * col[i])] = 2.0 * d.x;
                    jac[(r + row, 2 * col[i] + 1)] = 2.0 * d.y;
                    if col[p - 1] != usize::MAX {
                        jac[(r + row, 2 * col[p - 1])] = -2.0 * d.x;
                        jac[(r + row, 2 * col[p - 1] + 1)] = -2.0 * d.y;
                    }
                }
            }
            NodeKind::Fixed(_) => unreachable!(),
        }
    }
    Ok(jac.lu().determinant())
}
