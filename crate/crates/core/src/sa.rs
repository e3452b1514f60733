//! Simulated annealing over linkage structures.
//!
//! The chain starts from a lone motor and mutates the current design with
//! one of four moves picked uniformly: add a node, remove the last node,
//! perturb one node's position at one sample, or take a gradient step on
//! all continuous parameters. Candidates are accepted by the Metropolis
//! rule under an exponential cooling schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{Control, Interrupt};
use crate::geometry::Vec2;
use crate::kinematics::{
    objective, signed_area, trace, Linkage, MotorSpec, NodeDef, NodeKind, Orientation, Spin,
    TargetCurve,
};
use crate::nlp::refine_linkage;
use crate::solution::{Provenance, Solution};
use crate::topology::{assignment_from_linkage, check_topology, flux_feasible};

/// Consecutive failed move attempts after which [`mutate`] gives up.
pub const MAX_RETRIES: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SaConfig {
    pub t_max: f64,
    pub t_min: f64,
    pub i_max: usize,
    pub seed: u64,
    /// Largest node count a design may reach.
    pub max_nodes: usize,
    pub samples: usize,
    pub lambda: f64,
    pub box_side: f64,
    /// Centre of the workspace; the initial motor sits here and new fixed
    /// nodes are drawn from the square of side `box_side` around it.
    #[serde(default)]
    pub center: Vec2,
}

impl SaConfig {
    pub fn new(box_side: f64) -> Self {
        SaConfig {
            t_max: 2.5e4,
            t_min: 2.5,
            i_max: 50_000,
            seed: 0,
            max_nodes: 7,
            samples: 20,
            lambda: 0.0,
            box_side,
            center: Vec2::ZERO,
        }
    }

    pub fn validate(&self) -> Result<(), SaError> {
        let bad = |m: String| Err(SaError::BadConfig(m));
        if !(self.t_min > 0.0 && self.t_max > self.t_min && self.t_max.is_finite()) {
            return bad(format!(
                "need t_max > t_min > 0, got {} and {}",
                self.t_max, self.t_min
            ));
        }
        if !(self.box_side.is_finite() && self.box_side > 0.0) {
            return bad(format!("box side must be positive, got {}", self.box_side));
        }
        if self.max_nodes < 1 {
            return bad("max_nodes must be at least 1".into());
        }
        if self.samples < 3 {
            return bad(format!("need at least 3 samples, got {}", self.samples));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) || !self.center.is_finite() {
            return bad("lambda must be finite and non-negative and the centre finite".into());
        }
        Ok(())
    }
}

/// `T_max·exp(−ln(T_max/T_min)·i/i_max)`, with both end points returned
/// exactly.
pub fn cooling(cfg: &SaConfig, i: usize) -> f64 {
    if i == 0 || cfg.i_max == 0 {
        return cfg.t_max;
    }
    if i >= cfg.i_max {
        return cfg.t_min;
    }
    cfg.t_max * (-(cfg.t_max / cfg.t_min).ln() * i as f64 / cfg.i_max as f64).exp()
}

/// Metropolis rule: always accept an improvement, otherwise accept with
/// probability `exp(−Δ/T)`. `u` is a uniform draw from `[0, 1)`.
pub fn metropolis(delta: f64, temperature: f64, u: f64) -> bool {
    delta <= 0.0 || u < (-delta / temperature).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MoveType {
    Addition,
    Subtraction,
    Perturbation,
    LocalOptimization,
}

impl MoveType {
    pub const ALL: [MoveType; 4] = [
        MoveType::Addition,
        MoveType::Subtraction,
        MoveType::Perturbation,
        MoveType::LocalOptimization,
    ];
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveStats {
    pub attempted: u64,
    pub succeeded: u64,
    pub accepted: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SaState {
    pub current: Linkage,
    pub current_objective: f64,
    pub best: Linkage,
    pub best_objective: f64,
    pub iteration: usize,
    /// Indexed like [`MoveType::ALL`].
    pub move_stats: [MoveStats; 4],
}

impl SaState {
    pub fn new(initial: Linkage, target: &TargetCurve, lambda: f64) -> Result<Self, SaError> {
        let f = evaluate(&initial, target, lambda).ok_or(SaError::InvalidInitial)?;
        Ok(SaState {
            best: initial.clone(),
            current: initial,
            current_objective: f,
            best_objective: f,
            iteration: 0,
            move_stats: Default::default(),
        })
    }

    pub fn stats(&self, m: MoveType) -> MoveStats {
        self.move_stats[m as usize]
    }
}

/// One line of the progress stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Progress {
    pub iteration: usize,
    pub temperature: f64,
    pub current_objective: f64,
    pub best_objective: f64,
    pub move_type: MoveType,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SaError {
    #[error("invalid annealing settings: {0}")]
    BadConfig(String),
    #[error(
        "the initial linkage does not trace the target's samples or breaks the topology rules"
    )]
    InvalidInitial,
    #[error("target has {found} samples but the settings ask for {expected}")]
    SampleMismatch { expected: usize, found: usize },
    #[error("no move succeeded in {0} consecutive attempts")]
    ExhaustedRetries(usize),
}

/// The trivial starting design: a clockwise motor of radius `B/10` at the
/// workspace centre.
pub fn initial_linkage(cfg: &SaConfig) -> Linkage {
    Linkage::motor_only(
        MotorSpec::rotary(cfg.center, 0.1 * cfg.box_side, Spin::Clockwise),
        cfg.box_side,
    )
    .expect("positive radius and box")
}

/// Tracking error of the part that drives the end-effector plus `λ` per
/// node, or `None` when that part does not trace.
pub fn evaluate(linkage: &Linkage, target: &TargetCurve, lambda: f64) -> Option<f64> {
    let driving = linkage.without_trailing_fixed();
    objective(&driving, target, 0.0)
        .ok()
        .map(|o| o.tracking + lambda * linkage.len() as f64)
}

/// Structure rules for a chain state: at most `k` nodes, and the driving
/// part (everything up to the last moving node) must be a valid topology.
/// Trailing fixed nodes are anchors waiting for something to attach.
pub fn topology_ok(linkage: &Linkage, k: usize) -> bool {
    if linkage.len() > k {
        return false;
    }
    let driving = linkage.without_trailing_fixed();
    if driving.len() == 1 {
        return true;
    }
    match assignment_from_linkage(&driving, k) {
        Ok(a) => check_topology(&a).is_ok() && flux_feasible(&a).feasible(),
        Err(_) => false,
    }
}

fn rebuild(nodes: Vec<NodeDef>, box_side: f64) -> Option<Linkage> {
    Linkage::new_open(nodes, box_side).ok()
}

/// Apply one move of the given type, or `None` when it fails.
pub fn try_move<R: Rng + ?Sized>(
    kind: MoveType,
    linkage: &Linkage,
    cfg: &SaConfig,
    target: &TargetCurve,
    rng: &mut R,
) -> Option<Linkage> {
    let b = cfg.box_side;
    let n = linkage.len();
    let candidate = match kind {
        MoveType::Addition => {
            if n + 1 > cfg.max_nodes {
                return None;
            }
            let mut nodes = linkage.nodes().to_vec();
            if rng.random_bool(0.5) {
                let p = cfg.center
                    + Vec2::new(
                        rng.random_range(-0.5 * b..0.5 * b),
                        rng.random_range(-0.5 * b..0.5 * b),
                    );
                nodes.push(NodeDef::fixed(n + 1, p));
            } else {
                if n < 2 {
                    return None;
                }
                let j = rng.random_range(1..n);
                let k = rng.random_range(j + 1..=n);
                let lengths = [draw_length(rng, b), draw_length(rng, b)];
                let orientation = if rng.random_bool(0.5) {
                    Orientation::Positive
                } else {
                    Orientation::Negative
                };
                nodes.push(NodeDef::movable(n + 1, [j, k], lengths, orientation));
            }
            let l = rebuild(nodes, b)?;
            if !topology_ok(&l, cfg.max_nodes) {
                return None;
            }
            l
        }
        MoveType::Subtraction => {
            if n < 2 {
                return None;
            }
            let l = rebuild(linkage.nodes()[..n - 1].to_vec(), b)?;
            if !topology_ok(&l, cfg.max_nodes) {
                return None;
            }
            l
        }
        MoveType::Perturbation => perturb(linkage, cfg, target.len(), rng)?,
        MoveType::LocalOptimization => refine_linkage(linkage, target).ok()?,
    };
    evaluate(&candidate, target, cfg.lambda)?;
    Some(candidate)
}

fn draw_length<R: Rng + ?Sized>(rng: &mut R, b: f64) -> f64 {
    // U(0, B) without the zero end point
    b * (1.0 - rng.random::<f64>())
}

/// Move one node at one sample by a zero-mean Gaussian step of standard
/// deviation `0.1·B` per coordinate. A movable node keeps its parents and
/// takes the link lengths and orientation that put it at the new point.
/// The motor is translated; a fixed node simply moves.
fn perturb<R: Rng + ?Sized>(
    linkage: &Linkage,
    cfg: &SaConfig,
    samples: usize,
    rng: &mut R,
) -> Option<Linkage> {
    let normal = Normal::new(0.0, 0.1 * cfg.box_side).expect("positive deviation");
    let i = rng.random_range(1..=linkage.len());
    let q = rng.random_range(0..samples);
    let step = Vec2::new(normal.sample(rng), normal.sample(rng));
    let mut nodes = linkage.nodes().to_vec();
    match &mut nodes[i - 1].kind {
        NodeKind::Motor(MotorSpec::Rotary { center, .. }) => *center = *center + step,
        NodeKind::Motor(MotorSpec::Linear { start, .. }) => *start = *start + step,
        NodeKind::Fixed(p) => *p = *p + step,
        NodeKind::Movable(m) => {
            let traj = trace(&linkage.without_trailing_fixed(), samples).ok()?;
            let p = traj.node(i)[q] + step;
            let (pj, pk) = (traj.node(m.parents[0])[q], traj.node(m.parents[1])[q]);
            let area = signed_area(p - pj, p - pk);
            if area == 0.0 {
                return None;
            }
            m.lengths = [p.distance(pj), p.distance(pk)];
            m.orientation = Orientation::from_sign(area);
        }
    }
    rebuild(nodes, cfg.box_side)
}

/// A successful mutation of the current state.
#[derive(Clone, Debug, PartialEq)]
pub struct Mutation {
    pub candidate: Linkage,
    pub move_type: MoveType,
    /// Attempts used, the successful one included.
    pub attempts: usize,
}

/// Pick move types uniformly until one succeeds, counting attempts and
/// successes in `state`.
pub fn mutate<R: Rng + ?Sized>(
    state: &mut SaState,
    cfg: &SaConfig,
    target: &TargetCurve,
    rng: &mut R,
) -> Result<Mutation, SaError> {
    for attempt in 1..=MAX_RETRIES {
        let kind = MoveType::ALL[rng.random_range(0..4)];
        state.move_stats[kind as usize].attempted += 1;
        if let Some(candidate) = try_move(kind, &state.current, cfg, target, rng) {
            state.move_stats[kind as usize].succeeded += 1;
            return Ok(Mutation {
                candidate,
                move_type: kind,
                attempts: attempt,
            });
        }
    }
    Err(SaError::ExhaustedRetries(MAX_RETRIES))
}

/// Why the chain ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SaStop {
    Completed,
    Interrupted(Interrupt),
    ExhaustedRetries { iteration: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaOutcome {
    pub state: SaState,
    pub solution: Solution,
    pub stop: SaStop,
}

/// Run the chain for `cfg.i_max` iterations from `initial` (or the lone
/// motor), reporting every iteration to `progress`.
pub fn run(
    cfg: &SaConfig,
    target: &TargetCurve,
    initial: Option<&Linkage>,
    control: &Control,
    mut progress: impl FnMut(&Progress),
) -> Result<SaOutcome, SaError> {
    run_observed(cfg, target, initial, control, |p, _| progress(p))
}

/// [`run`] with the chain state passed along with each progress line.
pub fn run_observed(
    cfg: &SaConfig,
    target: &TargetCurve,
    initial: Option<&Linkage>,
    control: &Control,
    mut progress: impl FnMut(&Progress, &SaState),
) -> Result<SaOutcome, SaError> {
    cfg.validate()?;
    if target.len() != cfg.samples {
        return Err(SaError::SampleMismatch {
            expected: cfg.samples,
            found: target.len(),
        });
    }
    let start = initial.cloned().unwrap_or_else(|| initial_linkage(cfg));
    if !topology_ok(&start, cfg.max_nodes) {
        return Err(SaError::InvalidInitial);
    }
    let mut state = SaState::new(start, target, cfg.lambda)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stop = SaStop::Completed;
    for i in 1..=cfg.i_max {
        if let Some(why) = control.interrupted() {
            stop = SaStop::Interrupted(why);
            break;
        }
        let temperature = cooling(cfg, i);
        let m = match mutate(&mut state, cfg, target, &mut rng) {
            Ok(m) => m,
            Err(_) => {
                stop = SaStop::ExhaustedRetries { iteration: i };
                break;
            }
        };
        let f = evaluate(&m.candidate, target, cfg.lambda).expect("successful moves trace");
        let accepted = metropolis(f - state.current_objective, temperature, rng.random());
        if accepted {
            state.move_stats[m.move_type as usize].accepted += 1;
            state.current = m.candidate;
            state.current_objective = f;
            if f < state.best_objective {
                state.best = state.current.clone();
                state.best_objective = f;
            }
        }
        state.iteration = i;
        progress(
            &Progress {
                iteration: i,
                temperature,
                current_objective: state.current_objective,
                best_objective: state.best_objective,
                move_type: m.move_type,
                accepted,
            },
            &state,
        );
    }
    let solution = Solution::new(
        Provenance::Sa(cfg.clone()),
        Some(cfg.seed),
        &state.best,
        target,
        cfg.lambda,
    )
    .map_err(|_| SaError::InvalidInitial)?;
    Ok(SaOutcome {
        state,
        solution,
        stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::CurveMode;

    fn circle(r: f64, t: usize) -> TargetCurve {
        let pts = crate::kinematics::sample_times(t)
            .iter()
            .map(|&a| Vec2::new(r * a.sin(), r * a.cos()))
            .collect();
        TargetCurve::new(pts, CurveMode::Fixed).unwrap()
    }

    #[test]
    fn schedule_end_points() {
        let cfg = SaConfig::new(10.0);
        assert_eq!(cooling(&cfg, 0), 2.5e4);
        assert_eq!(cooling(&cfg, cfg.i_max), 2.5);
        assert!((cooling(&cfg, cfg.i_max / 2) / 250.0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn full_design_cannot_grow() {
        let mut cfg = SaConfig::new(10.0);
        cfg.max_nodes = 1;
        let l = initial_linkage(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let target = circle(1.0, 8);
        cfg.samples = 8;
        assert!(try_move(MoveType::Addition, &l, &cfg, &target, &mut rng).is_none());
        assert!(try_move(MoveType::Subtraction, &l, &cfg, &target, &mut rng).is_none());
    }

    #[test]
    fn zero_iterations_keep_the_start() {
        let mut cfg = SaConfig::new(10.0);
        cfg.i_max = 0;
        cfg.samples = 8;
        let target = circle(2.0, 8);
        let out = run(&cfg, &target, None, &Control::default(), |_| {}).unwrap();
        assert_eq!(out.state.current, initial_linkage(&cfg));
        assert_eq!(out.state.iteration, 0);
        assert_eq!(out.stop, SaStop::Completed);
    }

    #[test]
    fn open_anchor_is_allowed() {
        let cfg = SaConfig::new(10.0);
        let l = Linkage::new_open(
            vec![
                NodeDef::motor(MotorSpec::rotary(Vec2::ZERO, 1.0, Spin::Clockwise)),
                NodeDef::fixed(2, Vec2::new(3.0, 0.0)),
            ],
            10.0,
        )
        .unwrap();
        assert!(topology_ok(&l, cfg.max_nodes));
        assert!(evaluate(&l, &circle(1.0, 8), 0.0).unwrap() < 1e-20);
    }
}
