use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec2;

/// Rotation sense of a rotary motor.
///
/// `Clockwise` is the `sin(+t)` branch: the crank starts at the top of its
/// circle and reaches the rightmost point at `t = π/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Spin {
    Clockwise,
    CounterClockwise,
}

impl Spin {
    pub fn sign(self) -> f64 {
        match self {
            Spin::Clockwise => 1.0,
            Spin::CounterClockwise => -1.0,
        }
    }
}

impl TryFrom<i8> for Spin {
    type Error = String;
    fn try_from(v: i8) -> Result<Self, String> {
        match v {
            1 => Ok(Spin::Clockwise),
            -1 => Ok(Spin::CounterClockwise),
            other => Err(format!("direction must be 1 or -1, got {other}")),
        }
    }
}

impl From<Spin> for i8 {
    fn from(s: Spin) -> i8 {
        match s {
            Spin::Clockwise => 1,
            Spin::CounterClockwise => -1,
        }
    }
}

/// Which of the two mirrored law-of-cosine solutions a movable node takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        }
    }

    pub fn from_sign(s: f64) -> Self {
        if s >= 0.0 {
            Orientation::Positive
        } else {
            Orientation::Negative
        }
    }
}

impl TryFrom<i8> for Orientation {
    type Error = String;
    fn try_from(v: i8) -> Result<Self, String> {
        match v {
            1 => Ok(Orientation::Positive),
            -1 => Ok(Orientation::Negative),
            other => Err(format!("orientation must be 1 or -1, got {other}")),
        }
    }
}

impl From<Orientation> for i8 {
    fn from(o: Orientation) -> i8 {
        match o {
            Orientation::Positive => 1,
            Orientation::Negative => -1,
        }
    }
}

/// The single actuator driving the linkage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MotorSpec {
    Rotary {
        center: Vec2,
        radius: f64,
        direction: Spin,
    },
    Linear {
        start: Vec2,
        direction: Vec2,
    },
}

impl MotorSpec {
    pub fn rotary(center: Vec2, radius: f64, direction: Spin) -> Self {
        MotorSpec::Rotary {
            center,
            radius,
            direction,
        }
    }

    pub fn validate(&self) -> Result<(), LinkageError> {
        match self {
            MotorSpec::Rotary { center, radius, .. } => {
                if !(radius.is_finite() && *radius > 0.0) || !center.is_finite() {
                    return Err(LinkageError::BadMotor(format!(
                        "rotary radius must be > 0, got {radius}"
                    )));
                }
            }
            MotorSpec::Linear { start, direction } => {
                if !start.is_finite() || !direction.is_finite() || direction.norm() == 0.0 {
                    return Err(LinkageError::BadMotor(
                        "linear direction must have nonzero norm".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Two lower-index parents, the link lengths to each and the mirror choice.
#[derive(Clone, Debug, PartialEq)]
pub struct Movable {
    pub parents: [usize; 2],
    pub lengths: [f64; 2],
    pub orientation: Orientation,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Motor(MotorSpec),
    Fixed(Vec2),
    Movable(Movable),
}

/// One node of a linkage; `index` is 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NodeRecord", into = "NodeRecord")]
pub struct NodeDef {
    pub index: usize,
    pub kind: NodeKind,
}

impl NodeDef {
    pub fn motor(spec: MotorSpec) -> Self {
        NodeDef {
            index: 1,
            kind: NodeKind::Motor(spec),
        }
    }

    pub fn fixed(index: usize, position: Vec2) -> Self {
        NodeDef {
            index,
            kind: NodeKind::Fixed(position),
        }
    }

    pub fn movable(
        index: usize,
        parents: [usize; 2],
        lengths: [f64; 2],
        orientation: Orientation,
    ) -> Self {
        NodeDef {
            index,
            kind: NodeKind::Movable(Movable {
                parents,
                lengths,
                orientation,
            }),
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self.kind, NodeKind::Fixed(_))
    }

    pub fn as_movable(&self) -> Option<&Movable> {
        match &self.kind {
            NodeKind::Movable(m) => Some(m),
            _ => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum KindTag {
    Motor,
    Fixed,
    Movable,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    index: usize,
    kind: KindTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    motor: Option<MotorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    position: Option<Vec2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parents: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lengths: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    orientation: Option<Orientation>,
}

impl TryFrom<NodeRecord> for NodeDef {
    type Error = String;

    fn try_from(r: NodeRecord) -> Result<Self, String> {
        let idx = r.index;
        let kind = match r.kind {
            KindTag::Motor => NodeKind::Motor(
                r.motor
                    .ok_or(format!("node {idx}: motor node needs \"motor\""))?,
            ),
            KindTag::Fixed => NodeKind::Fixed(
                r.position
                    .ok_or(format!("node {idx}: fixed node needs \"position\""))?,
            ),
            KindTag::Movable => NodeKind::Movable(Movable {
                parents: r
                    .parents
                    .ok_or(format!("node {idx}: movable node needs \"parents\""))?,
                lengths: r
                    .lengths
                    .ok_or(format!("node {idx}: movable node needs \"lengths\""))?,
                orientation: r
                    .orientation
                    .ok_or(format!("node {idx}: movable node needs \"orientation\""))?,
            }),
        };
        Ok(NodeDef { index: idx, kind })
    }
}

impl From<NodeDef> for NodeRecord {
    fn from(n: NodeDef) -> Self {
        let mut r = NodeRecord {
            index: n.index,
            kind: KindTag::Fixed,
            motor: None,
            position: None,
            parents: None,
            lengths: None,
            orientation: None,
        };
        match n.kind {
            NodeKind::Motor(m) => {
                r.kind = KindTag::Motor;
                r.motor = Some(m);
            }
            NodeKind::Fixed(p) => r.position = Some(p),
            NodeKind::Movable(m) => {
                r.kind = KindTag::Movable;
                r.parents = Some(m.parents);
                r.lengths = Some(m.lengths);
                r.orientation = Some(m.orientation);
            }
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinkageError {
    #[error("linkage has no nodes")]
    Empty,
    #[error("node {found} listed at position {expected}; indices must be 1..=N in order")]
    BadIndex { expected: usize, found: usize },
    #[error("node 1 must be the motor and no other node may be a motor")]
    MotorPlacement,
    #[error("invalid motor: {0}")]
    BadMotor(String),
    #[error("node {node}: parents {parents:?} must be distinct and lower than {node}")]
    BadParents { node: usize, parents: [usize; 2] },
    #[error("node {node}: link lengths {lengths:?} must lie in (0, {box_side}]")]
    BadLength {
        node: usize,
        lengths: [f64; 2],
        box_side: f64,
    },
    #[error("box side must be positive and finite, got {0}")]
    BadBox(f64),
    #[error("node {0}: position must be finite")]
    NonFinite(usize),
    #[error("the end-effector (last node) must be movable or the motor")]
    FixedEndEffector,
}

/// A planar linkage in minimal coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LinkageRecord", into = "LinkageRecord")]
pub struct Linkage {
    nodes: Vec<NodeDef>,
    box_side: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct LinkageRecord {
    box_side: f64,
    nodes: Vec<NodeDef>,
}

impl TryFrom<LinkageRecord> for Linkage {
    type Error = LinkageError;
    fn try_from(r: LinkageRecord) -> Result<Self, LinkageError> {
        Linkage::new(r.nodes, r.box_side)
    }
}

impl From<Linkage> for LinkageRecord {
    fn from(l: Linkage) -> Self {
        LinkageRecord {
            box_side: l.box_side,
            nodes: l.nodes,
        }
    }
}

impl Linkage {
    pub fn new(nodes: Vec<NodeDef>, box_side: f64) -> Result<Self, LinkageError> {
        let linkage = Linkage { nodes, box_side };
        linkage.check_structure()?;
        if linkage.nodes.last().map(NodeDef::is_fixed).unwrap_or(false) {
            return Err(LinkageError::FixedEndEffector);
        }
        Ok(linkage)
    }

    /// Like [`Linkage::new`] but tolerates trailing fixed nodes, which a
    /// growing design may carry before anything is attached to them.
    pub fn new_open(nodes: Vec<NodeDef>, box_side: f64) -> Result<Self, LinkageError> {
        let linkage = Linkage { nodes, box_side };
        linkage.check_structure()?;
        Ok(linkage)
    }

    /// A single rotary motor node.
    pub fn motor_only(motor: MotorSpec, box_side: f64) -> Result<Self, LinkageError> {
        Linkage::new(vec![NodeDef::motor(motor)], box_side)
    }

    fn check_structure(&self) -> Result<(), LinkageError> {
        if !(self.box_side.is_finite() && self.box_side > 0.0) {
            return Err(LinkageError::BadBox(self.box_side));
        }
        if self.nodes.is_empty() {
            return Err(LinkageError::Empty);
        }
        for (pos, node) in self.nodes.iter().enumerate() {
            if node.index != pos + 1 {
                return Err(LinkageError::BadIndex {
                    expected: pos + 1,
                    found: node.index,
                });
            }
            match &node.kind {
                NodeKind::Motor(m) => {
                    if pos != 0 {
                        return Err(LinkageError::MotorPlacement);
                    }
                    m.validate()?;
                }
                NodeKind::Fixed(p) => {
                    if pos == 0 {
                        return Err(LinkageError::MotorPlacement);
                    }
                    if !p.is_finite() {
                        return Err(LinkageError::NonFinite(node.index));
                    }
                }
                NodeKind::Movable(m) => {
                    if pos == 0 {
                        return Err(LinkageError::MotorPlacement);
                    }
                    let [j, k] = m.parents;
                    if j == k || j == 0 || k == 0 || j >= node.index || k >= node.index {
                        return Err(LinkageError::BadParents {
                            node: node.index,
                            parents: m.parents,
                        });
                    }
                    if m.lengths
                        .iter()
                        .any(|l| !(l.is_finite() && *l > 0.0 && *l <= self.box_side))
                    {
                        return Err(LinkageError::BadLength {
                            node: node.index,
                            lengths: m.lengths,
                            box_side: self.box_side,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[NodeDef] {
        &self.nodes
    }

    /// Node with 1-based index `i`.
    pub fn node(&self, i: usize) -> &NodeDef {
        &self.nodes[i - 1]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn box_side(&self) -> f64 {
        self.box_side
    }

    pub fn motor(&self) -> &MotorSpec {
        match &self.nodes[0].kind {
            NodeKind::Motor(m) => m,
            _ => unreachable!("validated: node 1 is the motor"),
        }
    }

    pub fn end_effector(&self) -> usize {
        self.nodes.len()
    }

    /// Number of nodes that move: the motor plus every movable node.
    pub fn movable_count(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_fixed()).count()
    }

    pub fn has_trailing_fixed(&self) -> bool {
        self.nodes.last().map(NodeDef::is_fixed).unwrap_or(false)
    }

    /// Prefix ending at the last non-fixed node, i.e. the part that drives
    /// the end-effector.
    pub fn without_trailing_fixed(&self) -> Linkage {
        let keep = self
            .nodes
            .iter()
            .rposition(|n| !n.is_fixed())
            .map(|p| p + 1)
            .unwrap_or(1);
        Linkage {
            nodes: self.nodes[..keep].to_vec(),
            box_side: self.box_side,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_bar() -> Linkage {
        Linkage::new(
            vec![
                NodeDef::motor(MotorSpec::rotary(Vec2::ZERO, 1.0, Spin::Clockwise)),
                NodeDef::fixed(2, Vec2::new(3.0, 0.0)),
                NodeDef::movable(3, [1, 2], [2.5, 2.5], Orientation::Positive),
            ],
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn json_round_trip_uses_documented_keys() {
        let l = four_bar();
        let v = serde_json::to_value(&l).unwrap();
        assert_eq!(v["boxSide"], 10.0);
        assert_eq!(v["nodes"][0]["kind"], "motor");
        assert_eq!(v["nodes"][0]["motor"]["kind"], "rotary");
        assert_eq!(v["nodes"][1]["position"], serde_json::json!([3.0, 0.0]));
        assert_eq!(v["nodes"][2]["parents"], serde_json::json!([1, 2]));
        assert_eq!(v["nodes"][2]["orientation"], 1);
        let back: Linkage = serde_json::from_value(v).unwrap();
        assert_eq!(back, l);
    }

    #[test]
    fn rejects_forward_references() {
        let err = Linkage::new(
            vec![
                NodeDef::motor(MotorSpec::rotary(Vec2::ZERO, 1.0, Spin::Clockwise)),
                NodeDef::movable(2, [1, 3], [1.0, 1.0], Orientation::Positive),
                NodeDef::fixed(3, Vec2::ZERO),
            ],
            10.0,
        )
        .unwrap_err();
        assert!(matches!(err, LinkageError::BadParents { node: 2, .. }));
    }

    #[test]
    fn rejects_equal_parents_and_long_links() {
        let motor = NodeDef::motor(MotorSpec::rotary(Vec2::ZERO, 1.0, Spin::Clockwise));
        let fixed = NodeDef::fixed(2, Vec2::new(1.0, 0.0));
        let same = NodeDef::movable(3, [2, 2], [1.0, 1.0], Orientation::Positive);
        assert!(Linkage::new(vec![motor.clone(), fixed.clone(), same], 10.0).is_err());
        let long = NodeDef::movable(3, [1, 2], [11.0, 1.0], Orientation::Positive);
        assert!(matches!(
            Linkage::new(vec![motor, fixed, long], 10.0),
            Err(LinkageError::BadLength { .. })
        ));
    }

    #[test]
    fn motor_checks() {
        assert!(MotorSpec::rotary(Vec2::ZERO, 0.0, Spin::Clockwise)
            .validate()
            .is_err());
        assert!(MotorSpec::Linear {
            start: Vec2::ZERO,
            direction: Vec2::ZERO
        }
        .validate()
        .is_err());
        let json = r#"{"kind":"rotary","center":[1,2],"radius":0.5,"direction":-1}"#;
        let m: MotorSpec = serde_json::from_str(json).unwrap();
        assert_eq!(
            m,
            MotorSpec::rotary(Vec2::new(1.0, 2.0), 0.5, Spin::CounterClockwise)
        );
    }

    #[test]
    fn trailing_fixed_only_in_open_form() {
        let nodes = vec![
            NodeDef::motor(MotorSpec::rotary(Vec2::ZERO, 1.0, Spin::Clockwise)),
            NodeDef::fixed(2, Vec2::new(1.0, 0.0)),
        ];
        assert_eq!(
            Linkage::new(nodes.clone(), 10.0),
            Err(LinkageError::FixedEndEffector)
        );
        let open = Linkage::new_open(nodes, 10.0).unwrap();
        assert_eq!(open.without_trailing_fixed().len(), 1);
    }
}
