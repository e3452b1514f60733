//! Variable values that realise a known design in a built model. Used as
//! oracles in tests, as solver warm starts, and to certify solutions.

use super::build::{breakpoints, SectorTable};
use super::config::{MotorKind, NodeClass, SynthesisConfig};
use super::ir::ModelIR;
use super::names;
use super::sos::log2_ceil;
use crate::geometry::{Aabb, Vec2};
use crate::kinematics::{trace, KinematicsError, Linkage, MotorSpec, NodeDef, Orientation, Spin};
use crate::topology::{assignment_from_linkage, slot_map, TopologyAssignment, TopologyError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssignError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("{0}")]
    Mismatch(String),
}

/// Values for every variable of `model` that realise `linkage` traced at the
/// model's `T` samples. Relaxation weights, sector selectors and block
/// weights are filled in when the model has them.
pub fn linkage_values(
    model: &ModelIR,
    cfg: &SynthesisConfig,
    linkage: &Linkage,
) -> Result<Vec<f64>, AssignError> {
    let topo = assignment_from_linkage(linkage, cfg.k)?;
    let traj = trace(linkage, cfg.t)?;
    let slots = slot_map(linkage.len(), cfg.k);
    let park = parking_spot(cfg);
    let mut positions = vec![vec![park; cfg.t]; cfg.k];
    for (node, &slot) in slots.iter().enumerate() {
        positions[slot - 1] = traj.positions[node].clone();
    }
    Ok(design_values(
        model,
        cfg,
        &topo,
        &positions,
        linkage.motor(),
    ))
}

/// A point inside every box that can apply to a fixed node, or the
/// workspace center.
pub fn parking_spot(cfg: &SynthesisConfig) -> Vec2 {
    let mut region = cfg.workspace();
    for b in cfg
        .boxes
        .iter()
        .filter(|b| b.applies_to != NodeClass::Movable)
    {
        region = Aabb {
            min: Vec2::new(
                region.min.x.max(b.region.min.x),
                region.min.y.max(b.region.min.y),
            ),
            max: Vec2::new(
                region.max.x.min(b.region.max.x),
                region.max.y.min(b.region.max.y),
            ),
        };
    }
    region.center()
}

/// Values from a decided topology and per-slot positions at every sample.
pub fn design_values(
    model: &ModelIR,
    cfg: &SynthesisConfig,
    topo: &TopologyAssignment,
    positions: &[Vec<Vec2>],
    motor: &MotorSpec,
) -> Vec<f64> {
    let mut x = vec![f64::NAN; model.variables.len()];
    topology_values(model, topo, &mut x);
    let mut set = |name: &str, v: f64| {
        if let Some(id) = model.var_id(name) {
            x[id] = v;
        }
    };
    let (k, t) = (cfg.k, cfg.t);
    for i in 1..=k {
        for q in 1..=t {
            set(&names::nx(i, q), positions[i - 1][q - 1].x);
            set(&names::ny(i, q), positions[i - 1][q - 1].y);
        }
    }
    let rest = [
        Vec2::new(cfg.box_side / 4.0, 0.0),
        Vec2::new(0.0, -cfg.box_side / 4.0),
    ];
    for i in 2..=k {
        let parents = topo.parents(i).filter(|_| topo.movable(i));
        for q in 1..=t {
            for d in 1..=2 {
                let v = match parents {
                    Some((a, b)) => {
                        let p = if d == 1 { a } else { b };
                        positions[i - 1][q - 1] - positions[p - 1][q - 1]
                    }
                    None => rest[d - 1],
                };
                set(&names::dx(d, i, q), v.x);
                set(&names::dy(d, i, q), v.y);
            }
        }
    }
    match motor {
        MotorSpec::Rotary { center, .. } => {
            set(names::XC, center.x);
            set(names::YC, center.y);
            for q in 1..=t {
                let m = positions[0][q - 1] - *center;
                set(&names::mx(q), m.x);
                set(&names::my(q), m.y);
            }
        }
        MotorSpec::Linear { start, direction } => {
            set(names::XC, start.x);
            set(names::YC, start.y);
            set(names::VX, direction.x);
            set(names::VY, direction.y);
        }
    }
    complete_relaxations(model, cfg, &mut x);
    x
}

/// Topology variables and the bits encoding its parent selectors.
pub fn topology_values(model: &ModelIR, topo: &TopologyAssignment, x: &mut [f64]) {
    let mut set = |name: &str, v: f64| {
        if let Some(id) = model.var_id(name) {
            x[id] = v;
        }
    };
    let k = topo.k;
    let b = |v: bool| if v { 1.0 } else { 0.0 };
    for i in 1..=k {
        set(&names::u(i), b(topo.u[i - 1]));
        set(&names::f(i), b(topo.f[i - 1]));
    }
    set(names::D, b(topo.d));
    for i in 2..=k {
        for (d, sel) in [(1, &topo.c1[i - 1]), (2, &topo.c2[i - 1])] {
            for (j, &on) in sel.iter().enumerate() {
                set(&names::c(d, j, i), b(on));
            }
            let member = sel.iter().position(|&on| on).unwrap_or(0);
            let set_name = names::c_set(d, i);
            for bit in 0..log2_ceil(i) {
                set(&names::sos_bit(&set_name, bit), sos1_bit(member, bit));
            }
        }
        for j in 1..i {
            set(&names::q(j, i), topo.q[j - 1][i - 1]);
            set(&names::r(j, i), topo.r[j - 1][i - 1]);
        }
    }
}

/// Encoding bit `b` that lets member `j` of an SOS1 set be nonzero.
pub fn sos1_bit(j: usize, b: usize) -> f64 {
    if j & (1 << b) == 0 {
        1.0
    } else {
        0.0
    }
}

/// Interpolation of `v` on the grid: segment index and weight of its upper
/// end.
pub fn grid_segment(alpha: &[f64], v: f64) -> (usize, f64) {
    let s = alpha.len() - 1;
    let step = alpha[1] - alpha[0];
    let seg = (((v - alpha[0]) / step).floor().max(0.0) as usize).min(s - 1);
    let theta = ((v - alpha[seg]) / step).clamp(0.0, 1.0);
    (seg, theta)
}

fn fill_sos2(
    model: &ModelIR,
    x: &mut [f64],
    set: &str,
    members: &[String],
    seg: usize,
    theta: f64,
) {
    for (j, name) in members.iter().enumerate() {
        let w = if j == seg {
            1.0 - theta
        } else if j == seg + 1 {
            theta
        } else {
            0.0
        };
        x[model.id(name)] = w;
    }
    let segments = members.len() - 1;
    for s in 0..segments {
        x[model.id(&names::sos_bar(set, s))] = if s == seg { 1.0 } else { 0.0 };
    }
    let bar_set = format!("{set}_bar");
    for bit in 0..log2_ceil(segments) {
        x[model.id(&names::sos_bit(&bar_set, bit))] = sos1_bit(seg, bit);
    }
}

/// Fill over-estimator weights, sector selectors and block weights from the
/// link vectors already present in `x`. Variables the model lacks are
/// skipped.
pub fn complete_relaxations(model: &ModelIR, cfg: &SynthesisConfig, x: &mut [f64]) {
    let alpha = breakpoints(cfg.box_side, cfg.s);
    let (k, t) = (cfg.k, cfg.t);
    for i in 2..=k {
        for d in 1..=2 {
            for q in 1..=t {
                for coord in [names::dx(d, i, q), names::dy(d, i, q)] {
                    let Some(sq) = model.var_id(&names::square(&coord)) else {
                        continue;
                    };
                    let v = x[model.id(&coord)];
                    let (seg, th) = grid_segment(&alpha, v);
                    x[sq] =
                        (1.0 - th) * alpha[seg] * alpha[seg] + th * alpha[seg + 1] * alpha[seg + 1];
                    let members: Vec<String> =
                        (0..alpha.len()).map(|s| names::weight(&coord, s)).collect();
                    fill_sos2(model, x, &names::pwl_set(&coord), &members, seg, th);
                }
            }
            for coord in [names::dx(d, i, 1), names::dy(d, i, 1)] {
                if model.var_id(&names::block(&coord, 0)).is_none() {
                    continue;
                }
                let v = x[model.id(&coord)];
                let (seg, th) = grid_segment(&alpha, v);
                let members: Vec<String> =
                    (0..alpha.len()).map(|s| names::block(&coord, s)).collect();
                fill_sos2(model, x, &names::block_set(&coord), &members, seg, th);
            }
        }
    }
    if model.var_id(&names::gamma(2, 1, 0)).is_some() {
        let table = SectorTable::for_config(cfg);
        for i in 2..=k {
            for q in 1..=t {
                let get = |n: String| x[model.id(&n)];
                let d1 = Vec2::new(get(names::dx(1, i, q)), get(names::dy(1, i, q)));
                let d2 = Vec2::new(get(names::dx(2, i, q)), get(names::dy(2, i, q)));
                let l = table
                    .find(d1, d2)
                    .unwrap_or_else(|| best_sector(&table, d1, d2));
                for j in 0..table.count {
                    x[model.id(&names::gamma(i, q, j))] = if j == l { 1.0 } else { 0.0 };
                }
                let set = names::sector_set(i, q);
                for bit in 0..log2_ceil(table.count) {
                    x[model.id(&names::sos_bit(&set, bit))] = sos1_bit(l, bit);
                }
            }
        }
    }
}

/// Sector with the smallest worst violation, for pairs no sector accepts.
fn best_sector(table: &SectorTable, d1: Vec2, d2: Vec2) -> usize {
    let worst = |l: usize| {
        let v = [
            -table.left[l].dot(d1),
            table.right[l].dot(d1),
            table.left_rotated[l].dot(d2),
            -table.right_rotated[l].dot(d2),
        ];
        v.into_iter().fold(f64::NEG_INFINITY, f64::max)
    };
    (0..table.count)
        .min_by(|&a, &b| worst(a).total_cmp(&worst(b)))
        .unwrap_or(0)
}

/// Read a linkage back from model values under a decided topology.
///
/// Used slots become nodes in slot order. Fixed positions, link lengths and
/// the motor radius are averaged over the samples, so the result is exact
/// whenever `x` satisfies the model.
pub fn extract_linkage(
    model: &ModelIR,
    cfg: &SynthesisConfig,
    topo: &TopologyAssignment,
    x: &[f64],
) -> Result<Linkage, AssignError> {
    let get = |name: &str| {
        model
            .var_id(name)
            .map(|i| x[i])
            .ok_or_else(|| AssignError::Mismatch(format!("model has no {name}")))
    };
    let t = cfg.t;
    let pos = |i: usize, q: usize| -> Result<Vec2, AssignError> {
        Ok(Vec2::new(get(&names::nx(i, q))?, get(&names::ny(i, q))?))
    };
    let center = Vec2::new(get(names::XC)?, get(names::YC)?);
    let motor = match cfg.motor {
        MotorKind::Rotary => {
            let mut radius = 0.0;
            for q in 1..=t {
                radius += pos(1, q)?.distance(center);
            }
            let direction = if topo.d {
                Spin::CounterClockwise
            } else {
                Spin::Clockwise
            };
            MotorSpec::rotary(center, radius / t as f64, direction)
        }
        MotorKind::Linear => MotorSpec::Linear {
            start: center,
            direction: Vec2::new(get(names::VX)?, get(names::VY)?),
        },
    };
    let used = topo.used_slots();
    let node_of = |slot: usize| used.iter().position(|&s| s == slot).map(|p| p + 1);
    let mut nodes = vec![NodeDef::motor(motor)];
    for &slot in used.iter().filter(|&&s| s > 1) {
        let index = nodes.len() + 1;
        if topo.fixed(slot) {
            let mut p = Vec2::ZERO;
            for q in 1..=t {
                p += pos(slot, q)?;
            }
            nodes.push(NodeDef::fixed(index, p * (1.0 / t as f64)));
            continue;
        }
        let (a, b) = topo
            .parents(slot)
            .ok_or_else(|| AssignError::Mismatch(format!("slot {slot} has no parents")))?;
        let (Some(na), Some(nb)) = (node_of(a), node_of(b)) else {
            return Err(AssignError::Mismatch(format!(
                "slot {slot} hangs off an unused slot"
            )));
        };
        let mut lengths = [0.0; 2];
        for q in 1..=t {
            let p = pos(slot, q)?;
            lengths[0] += p.distance(pos(a, q)?);
            lengths[1] += p.distance(pos(b, q)?);
        }
        let lengths = lengths.map(|l| l / t as f64);
        nodes.push(NodeDef::movable(
            index,
            [na, nb],
            lengths,
            Orientation::Positive,
        ));
    }
    Linkage::new(nodes, cfg.box_side).map_err(|e| AssignError::Mismatch(e.to_string()))
}
