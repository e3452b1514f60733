use serde::{Deserialize, Serialize};

use super::curve::{CurveMode, TargetCurve};
use super::forward::{trace, KinematicsError};
use super::linkage::Linkage;
use super::matching::min_cost_assignment;
use crate::geometry::Vec2;

/// Objective value split into its two terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub total: f64,
    pub tracking: f64,
    pub regularization: f64,
}

impl ObjectiveBreakdown {
    pub fn infeasible() -> Self {
        ObjectiveBreakdown {
            total: f64::INFINITY,
            tracking: f64::INFINITY,
            regularization: 0.0,
        }
    }
}

/// For each traced sample, the index of the target sample it is compared
/// against. The identity in fixed-order mode.
pub fn matching(traced: &[Vec2], target: &TargetCurve) -> Vec<usize> {
    match target.mode() {
        CurveMode::Fixed => (0..traced.len()).collect(),
        CurveMode::Arbitrary => {
            let cost: Vec<Vec<f64>> = traced
                .iter()
                .map(|p| {
                    target
                        .samples()
                        .iter()
                        .map(|s| (*p - *s).norm_sq())
                        .collect()
                })
                .collect();
            min_cost_assignment(&cost).0
        }
    }
}

/// Weighted squared tracking error `(2π/T)·Σ‖p_q − s_σ(q)‖²`.
pub fn tracking_error(traced: &[Vec2], target: &TargetCurve) -> f64 {
    let m = matching(traced, target);
    let w = std::f64::consts::TAU / target.len() as f64;
    w * traced
        .iter()
        .zip(&m)
        .map(|(p, &j)| (*p - target.samples()[j]).norm_sq())
        .sum::<f64>()
}

/// Tracking error plus `λ` per node present.
pub fn objective(
    linkage: &Linkage,
    target: &TargetCurve,
    lambda: f64,
) -> Result<ObjectiveBreakdown, KinematicsError> {
    let tr = trace(linkage, target.len())?;
    let tracking = tracking_error(tr.end_effector(), target);
    let regularization = lambda * linkage.len() as f64;
    Ok(ObjectiveBreakdown {
        total: tracking + regularization,
        tracking,
        regularization,
    })
}

/// Same as [`objective`] with infeasible designs mapped to `+∞`.
pub fn objective_or_inf(
    linkage: &Linkage,
    target: &TargetCurve,
    lambda: f64,
) -> ObjectiveBreakdown {
    objective(linkage, target, lambda).unwrap_or_else(|_| ObjectiveBreakdown::infeasible())
}
