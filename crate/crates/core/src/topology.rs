//! Binary encoding of linkage structure.
//!
//! Slots are numbered `1..=K`. Slot 1 is the motor and slot `K` the
//! end-effector. For every slot `i` the assignment stores a usage bit `U_i`,
//! a fixed bit `F_i` and two one-hot parent selectors `C^1_{·i}` and
//! `C^2_{·i}` over `j = 0..i-1`, where `j = 0` is the "no parent" slot used
//! by fixed and unused nodes. Two network flows certify that every used node
//! influences the end-effector (`Q`, flowing upwards into slot `K`) and that
//! every movable node is driven by the motor (`R`, flowing downwards into
//! slot 1 through movable nodes only).

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{Linkage, MotorSpec, NodeKind, Orientation, Spin};

/// Largest `K` accepted by [`enumerate_topologies`].
pub const ENUMERATION_LIMIT: usize = 6;

/// Tolerance on flux balance when checking supplied flux values.
pub const FLUX_TOL: f64 = 1e-9;

/// Values of all structural variables for `K` slots.
///
/// Vectors are 0-based: `u[i-1]` is `U_i`, `c1[i-1][j]` is `C^1_{ji}` for
/// `j = 0..i`, and `q[j-1][i-1]` is the flux on link `j → i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AssignmentRecord", into = "AssignmentRecord")]
pub struct TopologyAssignment {
    pub k: usize,
    pub u: Vec<bool>,
    pub f: Vec<bool>,
    pub c1: Vec<Vec<bool>>,
    pub c2: Vec<Vec<bool>>,
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    /// Motor direction bit; `false` is clockwise.
    pub d: bool,
}

#[derive(Serialize, Deserialize)]
struct AssignmentRecord {
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "U")]
    u: Vec<u8>,
    #[serde(rename = "F")]
    f: Vec<u8>,
    #[serde(rename = "C1")]
    c1: Vec<Vec<u8>>,
    #[serde(rename = "C2")]
    c2: Vec<Vec<u8>>,
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    r: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    d: u8,
}

fn bit(v: u8) -> Result<bool, String> {
    match v {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(format!("expected a 0/1 bit, got {other}")),
    }
}

impl TryFrom<AssignmentRecord> for TopologyAssignment {
    type Error = String;
    fn try_from(r: AssignmentRecord) -> Result<Self, String> {
        let k = r.k;
        let shape_ok = r.u.len() == k
            && r.f.len() == k
            && r.c1.len() == k
            && r.c2.len() == k
            && (0..k).all(|i| r.c1[i].len() == i + 1 && r.c2[i].len() == i + 1)
            && r.q.len() == k
            && r.r.len() == k
            && r.q.iter().chain(&r.r).all(|row| row.len() == k);
        if !shape_ok {
            return Err(format!("assignment arrays do not match K = {k}"));
        }
        let bits = |v: Vec<u8>| v.into_iter().map(bit).collect::<Result<Vec<_>, _>>();
        Ok(TopologyAssignment {
            k,
            u: bits(r.u)?,
            f: bits(r.f)?,
            c1: r.c1.into_iter().map(bits).collect::<Result<_, _>>()?,
            c2: r.c2.into_iter().map(bits).collect::<Result<_, _>>()?,
            q: r.q,
            r: r.r,
            d: bit(r.d)?,
        })
    }
}

impl From<TopologyAssignment> for AssignmentRecord {
    fn from(a: TopologyAssignment) -> Self {
        let bits = |v: Vec<bool>| v.into_iter().map(u8::from).collect::<Vec<_>>();
        AssignmentRecord {
            k: a.k,
            u: bits(a.u),
            f: bits(a.f),
            c1: a.c1.into_iter().map(bits).collect(),
            c2: a.c2.into_iter().map(bits).collect(),
            q: a.q,
            r: a.r,
            d: u8::from(a.d),
        }
    }
}

impl TopologyAssignment {
    /// Every slot except 1 and `K` unused; no parents anywhere; zero flux.
    pub fn empty(k: usize) -> Self {
        let mut c = Vec::with_capacity(k);
        for i in 0..k {
            let mut row = vec![false; i + 1];
            row[0] = true;
            c.push(row);
        }
        let mut u = vec![false; k];
        u[0] = true;
        u[k - 1] = true;
        let mut f = vec![true; k];
        f[0] = false;
        TopologyAssignment {
            k,
            u,
            f,
            c1: c.clone(),
            c2: c,
            q: vec![vec![0.0; k]; k],
            r: vec![vec![0.0; k]; k],
            d: false,
        }
    }

    /// Make slot `i` a used movable node with the given selector parents.
    pub fn set_movable(&mut self, i: usize, first: usize, second: usize) {
        self.u[i - 1] = true;
        self.f[i - 1] = false;
        self.c1[i - 1].iter_mut().for_each(|b| *b = false);
        self.c2[i - 1].iter_mut().for_each(|b| *b = false);
        self.c1[i - 1][first] = true;
        self.c2[i - 1][second] = true;
    }

    /// Make slot `i` a used fixed node.
    pub fn set_fixed(&mut self, i: usize) {
        self.u[i - 1] = true;
        self.f[i - 1] = true;
        self.c1[i - 1]
            .iter_mut()
            .enumerate()
            .for_each(|(j, b)| *b = j == 0);
        self.c2[i - 1]
            .iter_mut()
            .enumerate()
            .for_each(|(j, b)| *b = j == 0);
    }

    pub fn used(&self, i: usize) -> bool {
        self.u[i - 1]
    }

    pub fn fixed(&self, i: usize) -> bool {
        self.f[i - 1]
    }

    pub fn movable(&self, i: usize) -> bool {
        self.u[i - 1] && !self.f[i - 1]
    }

    /// `C_ji = C^1_ji + C^2_ji` as an integer.
    pub fn link(&self, j: usize, i: usize) -> u8 {
        u8::from(self.c1[i - 1][j]) + u8::from(self.c2[i - 1][j])
    }

    /// Selected parents `(first, second)` of a movable slot `i ≥ 2`.
    pub fn parents(&self, i: usize) -> Option<(usize, usize)> {
        if i < 2 {
            return None;
        }
        let a = self.c1[i - 1].iter().position(|&b| b)?;
        let b = self.c2[i - 1].iter().position(|&b| b)?;
        (a > 0 && b > 0).then_some((a, b))
    }

    /// Used slots in ascending order.
    pub fn used_slots(&self) -> Vec<usize> {
        (1..=self.k).filter(|&i| self.used(i)).collect()
    }

    /// Projection onto the structural bits `(U, F, C^1, C^2)`.
    pub fn structure_key(&self) -> StructureKey {
        StructureKey {
            u: self.u.clone(),
            f: self.f.clone(),
            c1: self.c1.clone(),
            c2: self.c2.clone(),
        }
    }
}

/// Hashable projection of an assignment onto `(U, F, C^1, C^2)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StructureKey {
    pub u: Vec<bool>,
    pub f: Vec<bool>,
    pub c1: Vec<Vec<bool>>,
    pub c2: Vec<Vec<bool>>,
}

/// Which family of structural constraints a violation belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ConstraintGroup {
    /// Node usage: slot 1 and `K` used, slot 1 movable, unused implies fixed.
    State,
    /// Parent selection: one-hot selectors, two distinct used parents for
    /// movable nodes, none for fixed ones.
    Connectivity,
    /// Forward flux conservation (`Q`).
    Balance,
    /// Reverse flux conservation (`R`).
    ReverseBalance,
    /// Array sizes do not match `K`.
    Shape,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub group: ConstraintGroup,
    pub node: usize,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at node {}: {}", self.group, self.node, self.detail)
    }
}

/// Check every structural constraint, including the supplied flux values.
pub fn check_topology(a: &TopologyAssignment) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let k = a.k;
    let mut push = |group, node, detail: String| {
        out.push(Violation {
            group,
            node,
            detail,
        })
    };

    let shape_ok = k >= 1
        && a.u.len() == k
        && a.f.len() == k
        && a.c1.len() == k
        && a.c2.len() == k
        && (0..k).all(|i| a.c1[i].len() == i + 1 && a.c2[i].len() == i + 1)
        && a.q.len() == k
        && a.r.len() == k
        && a.q.iter().chain(&a.r).all(|row| row.len() == k);
    if !shape_ok {
        push(
            ConstraintGroup::Shape,
            0,
            format!("arrays do not match K = {k}"),
        );
        return Err(out);
    }

    use ConstraintGroup::*;
    if !a.u[0] {
        push(State, 1, "U_1 must be 1".into());
    }
    if !a.u[k - 1] {
        push(State, k, "U_K must be 1".into());
    }
    if a.f[0] {
        push(State, 1, "F_1 must be 0 (the motor moves)".into());
    }
    for i in 1..=k {
        if !a.u[i - 1] && !a.f[i - 1] {
            push(
                State,
                i,
                "1 - F_i <= U_i violated (an unused node cannot move)".into(),
            );
        }
    }

    for i in 2..=k {
        for (name, sel) in [("C1", &a.c1[i - 1]), ("C2", &a.c2[i - 1])] {
            let ones = sel.iter().filter(|&&b| b).count();
            if ones != 1 {
                push(
                    Connectivity,
                    i,
                    format!("{name} selector has {ones} ones, expected exactly 1"),
                );
            }
            for j in 1..i {
                if sel[j] && !a.u[j - 1] {
                    push(Connectivity, i, format!("{name} selects unused node {j}"));
                }
            }
        }
        let mut total = 0u32;
        for j in 1..i {
            let c = a.link(j, i);
            if c > 1 {
                push(
                    Connectivity,
                    i,
                    format!("node {j} selected twice as a parent"),
                );
            }
            total += u32::from(c);
        }
        let expect = if a.f[i - 1] { 0 } else { 2 };
        if total != expect {
            push(
                Connectivity,
                i,
                format!("{total} parent links, expected 2 - 2F_i = {expect}"),
            );
        }
    }

    let kf = k as f64;
    for j in 1..=k {
        for i in 1..=k {
            let (qv, rv) = (a.q[j - 1][i - 1], a.r[j - 1][i - 1]);
            let cap = if j < i {
                f64::from(a.link(j, i)) * kf
            } else {
                0.0
            };
            if !(qv >= -FLUX_TOL && qv <= cap + FLUX_TOL) {
                push(Balance, i, format!("Q_{j},{i} = {qv} outside [0, {cap}]"));
            }
            let rcap = if a.f[j - 1] { 0.0 } else { cap };
            if !(rv >= -FLUX_TOL && rv <= rcap + FLUX_TOL) {
                push(
                    ReverseBalance,
                    i,
                    format!("R_{j},{i} = {rv} outside [0, {rcap}]"),
                );
            }
        }
    }
    for i in 1..k {
        let inflow: f64 = (1..i).map(|j| a.q[j - 1][i - 1]).sum();
        let outflow: f64 = (i + 1..=k).map(|m| a.q[i - 1][m - 1]).sum();
        let produced = f64::from(u8::from(a.u[i - 1]));
        if (produced + inflow - outflow).abs() > FLUX_TOL {
            push(
                Balance,
                i,
                format!(
                    "U_i + inflow = {} but outflow = {outflow}",
                    produced + inflow
                ),
            );
        }
    }
    for i in 2..=k {
        let toward_motor: f64 = (1..i).map(|j| a.r[j - 1][i - 1]).sum();
        let from_children: f64 = (i + 1..=k).map(|m| a.r[i - 1][m - 1]).sum();
        let produced = if a.f[i - 1] { 0.0 } else { 1.0 };
        if (toward_motor - produced - from_children).abs() > FLUX_TOL {
            push(
                ReverseBalance,
                i,
                format!("flux toward motor {toward_motor} != 1 - F_i + {from_children}"),
            );
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Result of the flux existence test with witness flows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxReport {
    pub forward: bool,
    pub reverse: bool,
    /// Used slots whose unit of forward flux cannot reach slot `K`.
    pub stranded: Vec<usize>,
    /// Movable slots with no chain of movable parents down to the motor.
    pub undriven: Vec<usize>,
    pub q: Option<Vec<Vec<f64>>>,
    pub r: Option<Vec<Vec<f64>>>,
}

impl FluxReport {
    pub fn feasible(&self) -> bool {
        self.forward && self.reverse
    }
}

/// Decide whether flows satisfying both balance systems exist for the
/// structure in `a` (its `Q`/`R` fields are ignored), and build witnesses.
///
/// Forward flow exists iff every used slot reaches `K` along parent→child
/// links; each slot's unit is routed along the lexicographically smallest
/// such path. Reverse flow exists iff every movable slot reaches slot 1 via
/// movable parents.
pub fn flux_feasible(a: &TopologyAssignment) -> FluxReport {
    let k = a.k;
    let children = |j: usize| (j + 1..=k).filter(move |&i| a.link(j, i) > 0);

    // reaches_k[i]: slot i can reach K along ascending links
    let mut reaches_k = vec![false; k + 1];
    reaches_k[k] = true;
    for j in (1..k).rev() {
        reaches_k[j] = children(j).any(|i| reaches_k[i]);
    }
    let stranded: Vec<usize> = (1..k).filter(|&i| a.used(i) && !reaches_k[i]).collect();
    let forward = stranded.is_empty();
    let q = forward.then(|| {
        let mut q = vec![vec![0.0; k]; k];
        for start in (1..k).filter(|&i| a.used(i)) {
            let mut cur = start;
            while cur != k {
                let next = children(cur).find(|&i| reaches_k[i]).expect("reachable");
                q[cur - 1][next - 1] += 1.0;
                cur = next;
            }
        }
        q
    });

    let movable_parents = |i: usize| (1..i).filter(move |&j| a.link(j, i) > 0 && !a.f[j - 1]);
    let mut driven = vec![false; k + 1];
    driven[1] = !a.f[0];
    for i in 2..=k {
        driven[i] = movable_parents(i).any(|j| driven[j]);
    }
    let undriven: Vec<usize> = (2..=k).filter(|&i| a.movable(i) && !driven[i]).collect();
    let reverse = undriven.is_empty();
    let r = reverse.then(|| {
        let mut r = vec![vec![0.0; k]; k];
        for start in (2..=k).filter(|&i| a.movable(i)) {
            let mut cur = start;
            while cur != 1 {
                let next = movable_parents(cur).find(|&j| driven[j]).expect("driven");
                r[next - 1][cur - 1] += 1.0;
                cur = next;
            }
        }
        r
    });
    FluxReport {
        forward,
        reverse,
        stranded,
        undriven,
        q,
        r,
    }
}

/// Replace the flux fields with witnesses when they exist.
pub fn with_witness_fluxes(mut a: TopologyAssignment) -> Option<TopologyAssignment> {
    let rep = flux_feasible(&a);
    a.q = rep.q?;
    a.r = rep.r?;
    Some(a)
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("linkage has {nodes} nodes but only {k} slots are available")]
    TooManyNodes { nodes: usize, k: usize },
    #[error("a motor-only linkage has no movable node for the end-effector slot (K = {k} >= 2)")]
    NoEndEffectorSlot { k: usize },
    #[error("linkage ends in a fixed node")]
    FixedEndEffector,
    #[error("enumeration is limited to K <= {limit}, got {k}")]
    GuardExceeded { k: usize, limit: usize },
    #[error("K must be at least 2, got {0}")]
    TooFewSlots(usize),
}

/// Slot index of each linkage node when embedded into `K` slots: nodes keep
/// their index, except the end-effector which moves to slot `K`.
pub fn slot_map(nodes: usize, k: usize) -> Vec<usize> {
    (1..=nodes)
        .map(|i| if i == nodes { k } else { i })
        .collect()
}

/// Encode a linkage's structure. Orientation is carried by selector order:
/// a positive orientation puts the first parent in `C^1`, a negative one
/// puts it in `C^2`.
pub fn assignment_from_linkage(
    linkage: &Linkage,
    k: usize,
) -> Result<TopologyAssignment, TopologyError> {
    if k < 2 {
        return Err(TopologyError::TooFewSlots(k));
    }
    let n = linkage.len();
    if n > k {
        return Err(TopologyError::TooManyNodes { nodes: n, k });
    }
    if n == 1 {
        return Err(TopologyError::NoEndEffectorSlot { k });
    }
    if linkage.has_trailing_fixed() {
        return Err(TopologyError::FixedEndEffector);
    }
    let slots = slot_map(n, k);
    let mut a = TopologyAssignment::empty(k);
    a.d = match linkage.motor() {
        MotorSpec::Rotary { direction, .. } => *direction == Spin::CounterClockwise,
        MotorSpec::Linear { .. } => false,
    };
    for node in linkage.nodes().iter().skip(1) {
        let slot = slots[node.index - 1];
        match &node.kind {
            NodeKind::Fixed(_) => a.set_fixed(slot),
            NodeKind::Movable(m) => {
                let (pj, pk) = (slots[m.parents[0] - 1], slots[m.parents[1] - 1]);
                match m.orientation {
                    Orientation::Positive => a.set_movable(slot, pj, pk),
                    Orientation::Negative => a.set_movable(slot, pk, pj),
                }
            }
            NodeKind::Motor(_) => unreachable!("validated linkage"),
        }
    }
    let rep = flux_feasible(&a);
    if let (Some(q), Some(r)) = (rep.q, rep.r) {
        a.q = q;
        a.r = r;
    }
    Ok(a)
}

/// All structures for `K` slots that pass [`check_topology`] with witness
/// fluxes, in a fixed order. The direction bit is left at 0.
pub fn enumerate_topologies(
    k: usize,
) -> Result<std::vec::IntoIter<TopologyAssignment>, TopologyError> {
    if k < 2 {
        return Err(TopologyError::TooFewSlots(k));
    }
    if k > ENUMERATION_LIMIT {
        return Err(TopologyError::GuardExceeded {
            k,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut out = Vec::new();
    let mut a = TopologyAssignment::empty(k);
    enumerate_from(2, &mut a, &mut out);
    Ok(out.into_iter())
}

fn enumerate_from(i: usize, a: &mut TopologyAssignment, out: &mut Vec<TopologyAssignment>) {
    let k = a.k;
    if i > k {
        if let Some(w) = with_witness_fluxes(a.clone()) {
            debug_assert!(check_topology(&w).is_ok());
            out.push(w);
        }
        return;
    }
    let saved = (
        a.u[i - 1],
        a.f[i - 1],
        a.c1[i - 1].clone(),
        a.c2[i - 1].clone(),
    );
    if i < k {
        // unused
        a.u[i - 1] = false;
        a.f[i - 1] = true;
        a.c1[i - 1]
            .iter_mut()
            .enumerate()
            .for_each(|(j, b)| *b = j == 0);
        a.c2[i - 1]
            .iter_mut()
            .enumerate()
            .for_each(|(j, b)| *b = j == 0);
        enumerate_from(i + 1, a, out);
    }
    a.set_fixed(i);
    enumerate_from(i + 1, a, out);
    let used: Vec<usize> = (1..i).filter(|&j| a.used(j)).collect();
    for &p1 in &used {
        for &p2 in &used {
            if p1 != p2 {
                a.set_movable(i, p1, p2);
                enumerate_from(i + 1, a, out);
            }
        }
    }
    a.u[i - 1] = saved.0;
    a.f[i - 1] = saved.1;
    a.c1[i - 1] = saved.2;
    a.c2[i - 1] = saved.3;
}

/// Set of structural projections, for comparing against other encodings.
pub fn structure_set(
    items: impl IntoIterator<Item = TopologyAssignment>,
) -> BTreeSet<StructureKey> {
    items.into_iter().map(|a| a.structure_key()).collect()
}

/// The seven-slot walking mechanism `{3|2,1} {5|2,1} {4|3,2} {6|5,4}
/// {7|6,5}` with node 2 fixed, carrying the fractional forward flux shown
/// in its usual illustration and a witness reverse flux.
pub fn jansen_assignment() -> TopologyAssignment {
    let mut a = TopologyAssignment::empty(7);
    a.set_fixed(2);
    a.set_movable(3, 2, 1);
    a.set_movable(4, 3, 2);
    a.set_movable(5, 2, 1);
    a.set_movable(6, 5, 4);
    a.set_movable(7, 6, 5);
    let mut q = vec![vec![0.0; 7]; 7];
    for (j, i, v) in [
        (1, 3, 0.5),
        (1, 5, 0.5),
        (2, 3, 0.5),
        (2, 4, 0.0),
        (2, 5, 0.5),
        (3, 4, 2.0),
        (4, 6, 3.0),
        (5, 6, 1.0),
        (5, 7, 1.0),
        (6, 7, 5.0),
    ] {
        q[j - 1][i - 1] = v;
    }
    a.q = q;
    a.r = flux_feasible(&a).r.expect("jansen structure is driven");
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;
    use crate::kinematics::NodeDef;

    fn four_bar() -> Linkage {
        Linkage::new(
            vec![
                NodeDef::motor(MotorSpec::rotary(Vec2::ZERO, 1.0, Spin::Clockwise)),
                NodeDef::fixed(2, Vec2::new(3.0, 0.0)),
                NodeDef::movable(3, [1, 2], [3.0, 2.5], Orientation::Positive),
            ],
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn jansen_passes_with_printed_flux() {
        let a = jansen_assignment();
        assert_eq!(check_topology(&a), Ok(()));
        let rep = flux_feasible(&a);
        assert!(rep.forward && rep.reverse);
        let mut w = a.clone();
        w.q = rep.q.unwrap();
        w.r = rep.r.unwrap();
        assert_eq!(check_topology(&w), Ok(()));
        // node 6 collects its own unit plus 3 from node 4 and 1 from node 5
        assert_eq!(1.0 + a.q[3][5] + a.q[4][5], a.q[5][6]);
    }

    #[test]
    fn fixed_motor_is_reported() {
        let mut a = jansen_assignment();
        a.f[0] = true;
        let errs = check_topology(&a).unwrap_err();
        assert!(errs
            .iter()
            .any(|v| v.group == ConstraintGroup::State && v.node == 1));
    }

    #[test]
    fn single_parent_is_reported() {
        let mut a = jansen_assignment();
        a.c2[3] = vec![true, false, false, false];
        let errs = check_topology(&a).unwrap_err();
        assert!(errs
            .iter()
            .any(|v| v.group == ConstraintGroup::Connectivity && v.node == 4));
    }

    #[test]
    fn isolated_fixed_node_strands_flux() {
        let mut a = assignment_from_linkage(&four_bar(), 4).unwrap();
        // slot 3 is unused; make it a used fixed node attached to nothing
        a.set_fixed(3);
        let rep = flux_feasible(&a);
        assert!(!rep.forward);
        assert_eq!(rep.stranded, vec![3]);
    }

    #[test]
    fn fixed_parents_leave_node_undriven() {
        let mut a = TopologyAssignment::empty(4);
        a.set_fixed(2);
        a.set_fixed(3);
        a.set_movable(4, 2, 3);
        let rep = flux_feasible(&a);
        assert!(!rep.reverse);
        assert_eq!(rep.undriven, vec![4]);
    }

    #[test]
    fn four_bar_encoding() {
        let a = assignment_from_linkage(&four_bar(), 3).unwrap();
        assert_eq!(a.u, vec![true, true, true]);
        assert_eq!(a.f, vec![false, true, false]);
        assert_eq!(a.parents(3), Some((1, 2)));
        assert_eq!(check_topology(&a), Ok(()));
        let all = structure_set(enumerate_topologies(3).unwrap());
        assert!(all.contains(&a.structure_key()));
    }

    #[test]
    fn end_effector_moves_to_last_slot() {
        let a = assignment_from_linkage(&four_bar(), 5).unwrap();
        assert_eq!(a.used_slots(), vec![1, 2, 5]);
        assert_eq!(a.parents(5), Some((1, 2)));
        assert_eq!(check_topology(&a), Ok(()));
    }

    #[test]
    fn negative_orientation_swaps_selectors() {
        let base = four_bar();
        let mut nodes = base.nodes().to_vec();
        if let NodeKind::Movable(m) = &mut nodes[2].kind {
            m.orientation = Orientation::Negative;
        }
        let l = Linkage::new(nodes, base.box_side()).unwrap();
        let a = assignment_from_linkage(&l, 3).unwrap();
        assert_eq!(a.parents(3), Some((2, 1)));
    }

    #[test]
    fn boundary_cases() {
        let motor =
            Linkage::motor_only(MotorSpec::rotary(Vec2::ZERO, 1.0, Spin::Clockwise), 4.0).unwrap();
        assert_eq!(
            assignment_from_linkage(&motor, 2),
            Err(TopologyError::NoEndEffectorSlot { k: 2 })
        );
        assert_eq!(
            assignment_from_linkage(&four_bar(), 2),
            Err(TopologyError::TooManyNodes { nodes: 3, k: 2 })
        );
        assert!(matches!(
            enumerate_topologies(7),
            Err(TopologyError::GuardExceeded { k: 7, .. })
        ));
    }

    #[test]
    fn enumeration_golden_counts() {
        // frozen from the first verified run
        let counts: Vec<usize> = (2..=5)
            .map(|k| enumerate_topologies(k).unwrap().count())
            .collect();
        assert_eq!(counts, GOLDEN_COUNTS.to_vec());
    }

    const GOLDEN_COUNTS: [usize; 4] = [0, 2, 12, 98];

    #[test]
    fn json_keys() {
        let a = assignment_from_linkage(&four_bar(), 3).unwrap();
        let v = serde_json::to_value(&a).unwrap();
        for key in ["U", "F", "C1", "C2", "Q", "R", "D"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["C1"][2], serde_json::json!([0, 1, 0]));
        let back: TopologyAssignment = serde_json::from_value(v).unwrap();
        assert_eq!(back, a);
    }
}
