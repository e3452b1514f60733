//! Synthesis requests as submitted from the command line or over HTTP, and
//! a runner that dispatches them to either solver.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::bb::{self, BbConfig, BbEvent, BbStatus};
use crate::control::{Control, Interrupt};
use crate::geometry::Vec2;
use crate::kinematics::{CurveMode, Linkage, TargetCurve};
use crate::model::{BoxConstraint, MotorKind, SynthesisConfig};
use crate::sa::{self, SaConfig, SaStop};
use crate::solution::Solution;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Sa,
    Bb,
}

/// Time limit written as a human duration such as `"30s"` or `"2h"`.
mod humane {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => s.serialize_str(&humantime::format_duration(*d).to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| humantime::parse_duration(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Budget {
    #[serde(default, with = "humane", skip_serializing_if = "Option::is_none")]
    pub time_limit: Option<Duration>,
    /// Annealing iterations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    /// Branch-and-bound node solves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_limit: Option<usize>,
}

/// A target as drawn: any number of points, treated as a closed curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TargetInput {
    #[serde(alias = "samples")]
    pub points: Vec<Vec2>,
    #[serde(default)]
    pub mode: CurveMode,
}

impl TargetInput {
    /// The `t`-sample target. A polyline that already has `t` points is
    /// taken as given; anything else is resampled by equal arc length.
    pub fn curve(&self, t: usize) -> Result<TargetCurve, String> {
        if self.points.len() == t {
            TargetCurve::new(self.points.clone(), self.mode)
        } else {
            if self.points.len() < 3 {
                return Err(format!(
                    "a sketch needs at least 3 points, got {}",
                    self.points.len()
                ));
            }
            TargetCurve::resample(&self.points, t, self.mode)
        }
    }
}

fn default_k() -> usize {
    7
}
fn default_t() -> usize {
    20
}
fn default_s() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SynthesisRequest {
    pub target: TargetInput,
    #[serde(default)]
    pub solver: SolverKind,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_t")]
    pub t: usize,
    #[serde(default = "default_s")]
    pub s: usize,
    /// Per-node cost; derived from the target's spread when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Workspace side; derived from the target when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_side: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec2>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boxes: Vec<BoxConstraint>,
    #[serde(default)]
    pub motor: MotorKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub budget: Budget,
    /// Starting design for the annealing chain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Linkage>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct RequestError(pub String);

impl SynthesisRequest {
    pub fn new(target: TargetInput, solver: SolverKind) -> Self {
        SynthesisRequest {
            target,
            solver,
            k: default_k(),
            t: default_t(),
            s: default_s(),
            lambda: None,
            box_side: None,
            center: None,
            boxes: Vec::new(),
            motor: MotorKind::Rotary,
            seed: 0,
            budget: Budget::default(),
            initial: None,
        }
    }

    /// Resolve defaults and check everything that can be checked before a
    /// solver starts.
    pub fn synthesis_config(&self) -> Result<SynthesisConfig, RequestError> {
        let err = |m: String| RequestError(m);
        let target = self.target.curve(self.t).map_err(err)?;
        let mut cfg = SynthesisConfig::for_target(&target, self.k, self.s);
        if let Some(l) = self.lambda {
            cfg.lambda = l;
        }
        if let Some(b) = self.box_side {
            cfg.box_side = b;
            cfg.epsilon = 1e-3 * b * b;
        }
        if let Some(c) = self.center {
            cfg.center = c;
        }
        cfg.boxes = self.boxes.clone();
        cfg.motor = self.motor;
        cfg.validate().map_err(|e| err(e.to_string()))?;
        if self.solver == SolverKind::Sa {
            if self.motor == MotorKind::Linear {
                return Err(err(
                    "the annealing solver supports rotary motors only".into()
                ));
            }
            if !self.boxes.is_empty() {
                return Err(err(
                    "box constraints are enforced by the bb solver only".into()
                ));
            }
        } else if self.initial.is_some() {
            return Err(err(
                "an initial design is accepted by the sa solver only".into()
            ));
        }
        if self.budget.iterations == Some(0) || self.budget.node_limit == Some(0) {
            return Err(err("budgets must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn sa_config(&self, cfg: &SynthesisConfig) -> SaConfig {
        let mut sa = SaConfig::new(cfg.box_side);
        sa.center = cfg.center;
        sa.max_nodes = cfg.k;
        sa.samples = cfg.t;
        sa.lambda = cfg.lambda;
        sa.seed = self.seed;
        if let Some(i) = self.budget.iterations {
            sa.i_max = i;
        }
        sa
    }

    pub fn bb_config(&self, cfg: &SynthesisConfig, workers: usize) -> BbConfig {
        let mut bb = BbConfig::new(cfg.clone());
        bb.workers = workers.max(1);
        if let Some(n) = self.budget.node_limit {
            bb.node_limit = n;
        }
        bb
    }
}

/// Coarse progress of a running job.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunProgress {
    /// Iterations for annealing, explored nodes for branch and bound.
    pub steps: usize,
    pub best_objective: Option<f64>,
}

pub enum RunEvent<'a> {
    Progress(RunProgress),
    Incumbent {
        objective: f64,
        linkage: &'a Linkage,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum StopReason {
    Completed,
    BudgetExhausted,
    Cancelled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub stop: StopReason,
    pub solution: Option<Solution>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Request(#[from] RequestError),
    #[error("annealing failed: {0}")]
    Sa(#[from] sa::SaError),
    #[error("branch and bound failed: {0}")]
    Bb(#[from] bb::BbError),
}

/// How often annealing progress is forwarded.
const SA_PROGRESS_EVERY: usize = 250;

/// Run `req` to completion, cancellation or budget exhaustion. `workers`
/// only affects branch and bound.
pub fn run_request(
    req: &SynthesisRequest,
    cancel: Option<std::sync::Arc<std::sync::atomic::AtomicBool>>,
    workers: usize,
    mut observer: impl FnMut(RunEvent<'_>) + Send,
) -> Result<RunOutcome, RunError> {
    let cfg = req.synthesis_config()?;
    let target = cfg.target_curve().expect("resolved config has a target");
    let mut control = Control::with_time_limit(req.budget.time_limit);
    control.cancel = cancel;
    match req.solver {
        SolverKind::Sa => {
            let sa_cfg = req.sa_config(&cfg);
            let mut reported = f64::INFINITY;
            let out = sa::run_observed(
                &sa_cfg,
                &target,
                req.initial.as_ref(),
                &control,
                |p, state| {
                    if state.best_objective < reported {
                        reported = state.best_objective;
                        observer(RunEvent::Incumbent {
                            objective: reported,
                            linkage: &state.best,
                        });
                    }
                    if p.iteration % SA_PROGRESS_EVERY == 0 {
                        observer(RunEvent::Progress(RunProgress {
                            steps: p.iteration,
                            best_objective: Some(p.best_objective),
                        }));
                    }
                },
            )?;
            let stop = match out.stop {
                SaStop::Completed | SaStop::ExhaustedRetries { .. } => StopReason::Completed,
                SaStop::Interrupted(Interrupt::Cancelled) => StopReason::Cancelled,
                SaStop::Interrupted(Interrupt::TimeLimit) => StopReason::BudgetExhausted,
            };
            Ok(RunOutcome {
                stop,
                solution: Some(out.solution),
            })
        }
        SolverKind::Bb => {
            let bb_cfg = req.bb_config(&cfg, workers);
            let mut best = None;
            let out = bb::solve_parallel(&bb_cfg, &control, |e| match e {
                BbEvent::Node(n) => {
                    if let Some(inc) = n.incumbent {
                        best = Some(inc);
                    }
                    observer(RunEvent::Progress(RunProgress {
                        steps: n.node_id + 1,
                        best_objective: best,
                    }));
                }
                BbEvent::Incumbent(inc) => {
                    best = Some(inc.objective);
                    observer(RunEvent::Incumbent {
                        objective: inc.objective,
                        linkage: &inc.solution.linkage,
                    });
                }
            })?;
            let stop = match out.status {
                BbStatus::Completed => StopReason::Completed,
                BbStatus::BudgetExhausted => StopReason::BudgetExhausted,
                BbStatus::Cancelled => StopReason::Cancelled,
            };
            Ok(RunOutcome {
                stop,
                solution: out.incumbent.map(|i| i.solution),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> TargetInput {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        TargetInput {
            points: pts.iter().map(|&(x, y)| Vec2::new(x, y)).collect(),
            mode: CurveMode::Fixed,
        }
    }

    #[test]
    fn defaults_fill_in() {
        let req: SynthesisRequest =
            serde_json::from_str(r#"{"target":{"points":[[0,0],[1,0],[1,1],[0,1]]}}"#).unwrap();
        assert_eq!(
            (req.k, req.t, req.s, req.solver),
            (7, 20, 8, SolverKind::Sa)
        );
        let cfg = req.synthesis_config().unwrap();
        assert_eq!(cfg.target.unwrap().len(), 20);
    }

    #[test]
    fn time_limits_are_human_durations() {
        let b: Budget = serde_json::from_str(r#"{"timeLimit":"1m 30s"}"#).unwrap();
        assert_eq!(b.time_limit, Some(Duration::from_secs(90)));
        let back: Budget = serde_json::from_str(&serde_json::to_string(&b).unwrap()).unwrap();
        assert_eq!(back, b);
        assert!(serde_json::from_str::<Budget>(r#"{"timeLimit":"soon"}"#).is_err());
    }

    #[test]
    fn unsupported_combinations_are_refused() {
        let mut req = SynthesisRequest::new(square(), SolverKind::Sa);
        req.motor = MotorKind::Linear;
        assert!(req.synthesis_config().is_err());
        req.motor = MotorKind::Rotary;
        req.k = 1;
        assert!(req.synthesis_config().is_err());
        req.k = 3;
        req.budget.iterations = Some(0);
        assert!(req.synthesis_config().is_err());
    }

    #[test]
    fn exact_length_targets_are_kept() {
        let t = square().curve(4).unwrap();
        assert_eq!(t.samples(), square().points.as_slice());
        assert_eq!(square().curve(8).unwrap().len(), 8);
    }
}
