//! The result record shared by both solvers.

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::kinematics::{
    objective, trace, CurveMode, KinematicsError, Linkage, ObjectiveBreakdown, TargetCurve,
    Trajectory,
};

/// Which solver produced a design, with its settings echoed back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", content = "config", rename_all = "lowercase")]
pub enum Provenance {
    Sa(crate::sa::SaConfig),
    Bb(crate::bb::BbConfig),
}

/// A synthesized linkage together with everything needed to check it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Solution {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub seed: Option<u64>,
    pub linkage: Linkage,
    /// Node positions at the target's sample times.
    pub trajectory: Trajectory,
    pub objective: ObjectiveBreakdown,
    pub target: Vec<Vec2>,
    pub mode: CurveMode,
    pub lambda: f64,
}

impl Solution {
    /// Trailing fixed nodes are dropped first since they cannot affect the
    /// end-effector.
    pub fn new(
        provenance: Provenance,
        seed: Option<u64>,
        linkage: &Linkage,
        target: &TargetCurve,
        lambda: f64,
    ) -> Result<Self, KinematicsError> {
        let linkage = linkage.without_trailing_fixed();
        let trajectory = trace(&linkage, target.len())?;
        let objective = objective(&linkage, target, lambda)?;
        Ok(Solution {
            provenance,
            seed,
            linkage,
            trajectory,
            objective,
            target: target.samples().to_vec(),
            mode: target.mode(),
            lambda,
        })
    }

    pub fn target_curve(&self) -> Result<TargetCurve, String> {
        TargetCurve::new(self.target.clone(), self.mode)
    }

    /// Recompute the trajectory and objective from the stored linkage and
    /// compare them with the stored values.
    pub fn check(&self, tol: f64) -> Result<(), String> {
        let target = self.target_curve()?;
        let fresh = Solution::new(
            self.provenance.clone(),
            self.seed,
            &self.linkage,
            &target,
            self.lambda,
        )
        .map_err(|e| e.to_string())?;
        let scale = self.linkage.box_side();
        for (a, b) in fresh
            .trajectory
            .positions
            .iter()
            .flatten()
            .zip(self.trajectory.positions.iter().flatten())
        {
            if a.distance(*b) > tol * scale {
                return Err(format!(
                    "stored trajectory differs from a fresh trace by {}",
                    a.distance(*b)
                ));
            }
        }
        if fresh.trajectory.positions.len() != self.trajectory.positions.len() {
            return Err("stored trajectory has the wrong number of nodes".into());
        }
        let d = (fresh.objective.total - self.objective.total).abs();
        if d > tol * scale * scale {
            return Err(format!(
                "stored objective differs from a fresh evaluation by {d}"
            ));
        }
        Ok(())
    }
}
