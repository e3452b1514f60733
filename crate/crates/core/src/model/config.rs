use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, Vec2};
use crate::kinematics::{CurveMode, TargetCurve};

/// Kind of actuator the model should use for node 1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotorKind {
    #[default]
    Rotary,
    Linear,
}

/// Which nodes a box constraint restricts. The end-effector is never
/// restricted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeClass {
    #[default]
    All,
    Fixed,
    Movable,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoxConstraint {
    pub region: Aabb,
    #[serde(default)]
    pub applies_to: NodeClass,
}

impl BoxConstraint {
    pub fn applies(&self, fixed: bool) -> bool {
        match self.applies_to {
            NodeClass::All => true,
            NodeClass::Fixed => fixed,
            NodeClass::Movable => !fixed,
        }
    }
}

/// Problem size and tuning for model construction and the solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SynthesisConfig {
    /// Maximal node count.
    pub k: usize,
    /// Trajectory samples.
    pub t: usize,
    /// Relaxation resolution.
    pub s: usize,
    pub box_side: f64,
    /// Center of the square workspace.
    pub center: Vec2,
    pub epsilon: f64,
    pub lambda: f64,
    #[serde(default)]
    pub boxes: Vec<BoxConstraint>,
    #[serde(default)]
    pub motor: MotorKind,
    #[serde(default)]
    pub mode: CurveMode,
    /// `T` target samples; when absent the objective has no tracking term.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<Vec2>>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);

impl SynthesisConfig {
    /// Configuration without a target, centered at the origin.
    pub fn new(k: usize, t: usize, s: usize, box_side: f64) -> Self {
        SynthesisConfig {
            k,
            t,
            s,
            box_side,
            center: Vec2::ZERO,
            epsilon: 1e-3 * box_side * box_side,
            lambda: 0.0,
            boxes: Vec::new(),
            motor: MotorKind::Rotary,
            mode: CurveMode::Fixed,
            target: None,
        }
    }

    /// Defaults derived from the target: workspace twice the bounding-box
    /// diagonal around the centroid, `ε = 1e-3·B²` and `λ` from the spread
    /// of the samples.
    pub fn for_target(target: &TargetCurve, k: usize, s: usize) -> Self {
        let b = target.default_box_side();
        SynthesisConfig {
            center: target.centroid(),
            lambda: target.default_lambda(),
            mode: target.mode(),
            target: Some(target.samples().to_vec()),
            ..SynthesisConfig::new(k, target.len(), s, b)
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError(m));
        if self.k < 2 {
            return fail(format!(
                "K must be at least 2 (motor plus end-effector), got {}",
                self.k
            ));
        }
        if self.t < 3 {
            return fail(format!("T must be at least 3, got {}", self.t));
        }
        if self.s < 1 {
            return fail("S must be at least 1".into());
        }
        if !(self.box_side.is_finite() && self.box_side > 0.0) {
            return fail(format!("box side must be positive, got {}", self.box_side));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return fail(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return fail(format!("lambda must be non-negative, got {}", self.lambda));
        }
        if !self.center.is_finite() {
            return fail("center must be finite".into());
        }
        if let Some(t) = &self.target {
            if t.len() != self.t {
                return fail(format!("target has {} samples but T = {}", t.len(), self.t));
            }
        }
        for b in &self.boxes {
            if !(b.region.min.is_finite() && b.region.max.is_finite()) {
                return fail("box constraint must be finite".into());
            }
        }
        Ok(())
    }

    pub fn workspace(&self) -> Aabb {
        Aabb::centered(self.center, self.box_side)
    }

    /// Big-M for link gating: twice the workspace diagonal.
    pub fn big_m(&self) -> f64 {
        2.0 * std::f64::consts::SQRT_2 * self.box_side
    }

    /// Angular margin between the two links of a movable node, derived
    /// from the area margin: `asin(ε / (B²/4))` clamped to `[1e-4, π/8]`.
    pub fn angular_margin(&self) -> f64 {
        let r = (self.epsilon / (self.box_side * self.box_side / 4.0)).min(1.0);
        r.asin().clamp(1e-4, std::f64::consts::PI / 8.0)
    }

    /// Sector count used by the angle relaxation; at least 4 per half turn
    /// so every sector is narrower than a right angle.
    pub fn sector_resolution(&self) -> usize {
        self.s.max(4)
    }

    pub fn target_curve(&self) -> Option<TargetCurve> {
        self.target
            .as_ref()
            .map(|t| TargetCurve::new(t.clone(), self.mode).expect("validated"))
    }
}
