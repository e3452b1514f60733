//! Branch and bound over topology binaries and first-sample grid cells.
//!
//! Every node pins part of the topology (usage, fixed bits, parent
//! selectors, motor direction) and, once the topology is complete, the
//! grid cell of each link vector at the first sample. Unit propagation
//! extends the pinned bits before a node's continuous problem is solved
//! with the local solver: phase I from the parent's phase-I point, then
//! phase II. Nodes whose topology is complete are turned into linkages,
//! polished in minimal coordinates and certified against the exact model
//! before they may become the incumbent.

mod propagate;

use std::collections::BTreeMap;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use propagate::{propagate, Decision, Extended, PartialAssignment, Propagation};

use crate::control::{Control, Interrupt};
use crate::geometry::Vec2;
use crate::kinematics::{
    motor_position, objective, sample_times, Linkage, MotorSpec, Spin, TargetCurve,
};
use crate::model::{
    breakpoints, build_exact, design_values, extract_linkage, linkage_values, log2_ceil, names,
    validate_with_tol, ModelIR, SynthesisConfig,
};
use crate::nlp::{
    polish_linkage, solve_phase1, solve_phase2, Fixings, NlpProblem, NlpResult, NlpSettings,
    NlpStatus,
};
use crate::solution::{Provenance, Solution};
use crate::topology::{with_witness_fluxes, TopologyAssignment};

/// Absolute slack in every comparison against the incumbent.
pub const PRUNE_TOL: f64 = 1e-9;
/// Phase-I starting points tried at the root.
pub const ROOT_STARTS: usize = 8;
/// Tolerance for certifying a candidate against the exact model.
pub const CERTIFY_TOL: f64 = 1e-6;
const POLISH_ITERS: usize = 300;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum NodeSelection {
    /// Smallest parent objective first; deeper, then older nodes win ties.
    #[default]
    BestFirst,
    /// Deepest node first; parent objective, then age break ties.
    DepthFirst,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BbConfig {
    /// Must carry a target.
    pub synthesis: SynthesisConfig,
    /// Nodes solved per worker.
    pub node_limit: usize,
    #[serde(default)]
    pub selection: NodeSelection,
    #[serde(default = "one")]
    pub workers: usize,
}

impl BbConfig {
    pub fn new(synthesis: SynthesisConfig) -> Self {
        BbConfig {
            synthesis,
            node_limit: 5000,
            selection: NodeSelection::BestFirst,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<(), BbError> {
        self.synthesis
            .validate()
            .map_err(|e| BbError::BadConfig(e.to_string()))?;
        if self.synthesis.target.is_none() {
            return Err(BbError::BadConfig(
                "branch and bound needs a target curve".into(),
            ));
        }
        if self.node_limit == 0 {
            return Err(BbError::BadConfig("node limit must be positive".into()));
        }
        if self.workers == 0 {
            return Err(BbError::BadConfig("at least one worker is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BbError {
    #[error("{0}")]
    BadConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PruneReason {
    /// Unit propagation found the pinned bits contradictory.
    Conflict,
    /// Phase I found no feasible point.
    Infeasible,
    /// Phase-II objective not below the incumbent.
    Bound,
    /// The incumbent already sits at the objective's floor of zero, so no
    /// node can improve on it.
    Floor,
}

/// One line of the search log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeLog {
    pub node_id: usize,
    pub parent_id: Option<usize>,
    pub depth: usize,
    /// The branching decision that created the node, e.g. `F_3=0`.
    pub decision: Option<String>,
    pub phase1_violation: Option<f64>,
    pub phase2_objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pruned_reason: Option<PruneReason>,
    /// Whether propagation alone proved the node infeasible.
    pub propagation_conflict: bool,
    /// Incumbent objective when the node was judged.
    pub incumbent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Incumbent {
    pub solution: Solution,
    pub objective: f64,
    /// `None` for the motor-only candidate tried before the search.
    pub found_at_node: Option<usize>,
    pub wall_clock: Duration,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum BbStatus {
    /// The tree was searched to the end.
    Completed,
    /// The node or time budget ran out with open nodes left.
    BudgetExhausted,
    Cancelled,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BbStats {
    pub created: usize,
    pub explored: usize,
    pub pruned: usize,
    pub open: usize,
    pub prune_reasons: BTreeMap<PruneReason, usize>,
    pub incumbent_updates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BbOutcome {
    pub status: BbStatus,
    pub incumbent: Option<Incumbent>,
    pub stats: BbStats,
    pub log: Vec<NodeLog>,
}

impl BbOutcome {
    /// The search log as JSON lines.
    pub fn log_jsonl(&self) -> String {
        self.log
            .iter()
            .map(|l| serde_json::to_string(l).expect("log serializes") + "\n")
            .collect()
    }
}

/// Notifications emitted while searching.
#[derive(Clone, Copy, Debug)]
pub enum BbEvent<'a> {
    Node(&'a NodeLog),
    Incumbent(&'a Incumbent),
}

/// Cell prefix of one first-sample link coordinate: the top `decided` bits
/// of the cell index equal `prefix`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct CellPrefix {
    prefix: usize,
    decided: usize,
}

type BlockKey = (usize, usize, usize);

#[derive(Clone, Debug)]
struct Node {
    id: usize,
    parent: Option<usize>,
    depth: usize,
    decision: Option<(Decision, bool)>,
    assignment: PartialAssignment,
    blocks: BTreeMap<BlockKey, CellPrefix>,
    warm: Option<Arc<Vec<f64>>>,
    priority: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Rank(f64);

impl Eq for Rank {}

impl PartialOrd for Rank {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rank {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

type QueueKey = (Rank, std::cmp::Reverse<usize>, Rank, usize);

fn queue_key(sel: NodeSelection, node: &Node) -> QueueKey {
    let depth = std::cmp::Reverse(node.depth);
    match sel {
        NodeSelection::BestFirst => (Rank(node.priority), depth, Rank(0.0), node.id),
        NodeSelection::DepthFirst => (Rank(0.0), depth, Rank(node.priority), node.id),
    }
}

/// Everything a node solve reads; shared by all workers.
struct Context {
    cfg: BbConfig,
    model: ModelIR,
    target: TargetCurve,
    alpha: Vec<f64>,
    cell_bits: usize,
    nlp: NlpSettings,
    has_direction: bool,
}

struct NodeResult {
    log: NodeLog,
    candidate: Option<(Linkage, f64)>,
    children: Vec<Node>,
}

impl Context {
    fn new(cfg: &BbConfig, control: &Control) -> Self {
        let model = build_exact(&cfg.synthesis);
        let target = cfg
            .synthesis
            .target_curve()
            .expect("validated config has a target");
        let has_direction = model.var_id(names::D).is_some();
        Context {
            alpha: breakpoints(cfg.synthesis.box_side, cfg.synthesis.s),
            cell_bits: log2_ceil(cfg.synthesis.s),
            nlp: NlpSettings {
                control: control.clone(),
                ..NlpSettings::default()
            },
            cfg: cfg.clone(),
            model,
            target,
            has_direction,
        }
    }

    fn cells(&self, p: CellPrefix) -> (usize, usize) {
        let r = self.cell_bits - p.decided;
        let lo = p.prefix << r;
        (
            lo.min(self.cfg.synthesis.s),
            ((p.prefix + 1) << r).min(self.cfg.synthesis.s),
        )
    }

    fn complete(&self, ext: &Extended) -> Option<TopologyAssignment> {
        if self.has_direction && ext.assignment.direction.is_none() {
            return None;
        }
        ext.topology()
    }

    fn fixings(&self, ext: &Extended, node: &Node) -> Fixings {
        let m = &self.model;
        let a = &ext.assignment;
        let mut fx = match self.complete(ext) {
            Some(topo) => Fixings::topology(m, &topo),
            None => {
                let mut fx = Fixings::default();
                let bit = |v: bool| if v { 1.0 } else { 0.0 };
                for i in 1..=a.k {
                    if let Some(v) = a.used[i - 1] {
                        fx.fix(m.id(&names::u(i)), bit(v));
                    }
                    if let Some(v) = a.fixed[i - 1] {
                        fx.fix(m.id(&names::f(i)), bit(v));
                    }
                }
                for i in 2..=a.k {
                    for d in 1..=2 {
                        let cand = ext.candidates(d, i);
                        for j in 0..i {
                            let var = m.id(&names::c(d, j, i));
                            if !cand.contains(&j) {
                                fx.fix(var, 0.0);
                            } else if cand.len() == 1 {
                                fx.fix(var, 1.0);
                            }
                        }
                        for (b, v) in a.selector_bits[i - 1][d - 1].iter().enumerate() {
                            if let Some(v) = v {
                                fx.fix(m.id(&names::sos_bit(&names::c_set(d, i), b)), bit(*v));
                            }
                        }
                    }
                }
                if let (Some(v), true) = (a.direction, self.has_direction) {
                    fx.fix(m.id(names::D), bit(v));
                }
                fx
            }
        };
        for (&(slot, d, axis), &p) in &node.blocks {
            let (lo, hi) = self.cells(p);
            let coord = if axis == 0 {
                names::dx(d, slot, 1)
            } else {
                names::dy(d, slot, 1)
            };
            fx.restrict(m.id(&coord), self.alpha[lo], self.alpha[hi]);
        }
        fx
    }

    /// Next decision in branching order: usage bits, fixed bits, selector
    /// bits, the direction bit, then cell bits of movable slots.
    fn next_decision(&self, ext: &Extended, node: &Node) -> Option<Decision> {
        let a = &ext.assignment;
        let k = a.k;
        let open = |d: Decision| a.get(d).is_none();
        let mut order: Vec<Decision> = (2..k).map(|slot| Decision::Used { slot }).collect();
        order.extend((2..=k).map(|slot| Decision::Fixed { slot }));
        for slot in 2..=k {
            for d in 1..=2 {
                order.extend((0..log2_ceil(slot)).map(|bit| Decision::Selector { d, slot, bit }));
            }
        }
        if self.has_direction {
            order.push(Decision::Direction);
        }
        if let Some(d) = order.into_iter().find(|&d| open(d)) {
            return Some(d);
        }
        for slot in (2..=k).filter(|&i| a.fixed[i - 1] == Some(false)) {
            for d in 1..=2 {
                for axis in 0..2 {
                    let p = node
                        .blocks
                        .get(&(slot, d, axis))
                        .copied()
                        .unwrap_or_default();
                    let (lo, hi) = self.cells(p);
                    if hi - lo > 1 {
                        return Some(Decision::Block {
                            d,
                            slot,
                            axis,
                            bit: self.cell_bits - 1 - p.decided,
                        });
                    }
                }
            }
        }
        None
    }

    fn children(
        &self,
        ext: &Extended,
        node: &Node,
        warm: Arc<Vec<f64>>,
        priority: f64,
    ) -> Vec<Node> {
        let Some(decision) = self.next_decision(ext, node) else {
            return Vec::new();
        };
        let values = match decision {
            Decision::Used { .. } => [true, false],
            _ => [false, true],
        };
        let mut out = Vec::new();
        for value in values {
            let mut child = Node {
                id: usize::MAX,
                parent: Some(node.id),
                depth: node.depth + 1,
                decision: Some((decision, value)),
                assignment: ext.assignment.clone(),
                blocks: node.blocks.clone(),
                warm: Some(warm.clone()),
                priority,
            };
            if let Decision::Block { d, slot, axis, .. } = decision {
                let p = child.blocks.entry((slot, d, axis)).or_default();
                p.prefix = p.prefix << 1 | usize::from(value);
                p.decided += 1;
                let (lo, hi) = self.cells(*p);
                if lo >= hi {
                    continue;
                }
            } else {
                child.assignment.set(decision, value);
            }
            out.push(child);
        }
        out
    }

    /// Deterministic phase-I starting points: the target centroid and
    /// points of a ring around the workspace center, each laid out for
    /// `topo`.
    fn seeded_starts(&self, topo: &TopologyAssignment) -> Vec<Vec<f64>> {
        let cfg = &self.cfg.synthesis;
        let b = cfg.box_side;
        let mut centers = vec![self.target.centroid()];
        let ring = [
            (-1, -1),
            (1, -1),
            (-1, 1),
            (1, 1),
            (-1, 0),
            (1, 0),
            (0, -1),
            (0, 1),
        ];
        centers.extend(
            ring.iter()
                .map(|&(i, j)| cfg.center + Vec2::new(i as f64, j as f64) * (b / 4.0)),
        );
        centers.truncate(ROOT_STARTS);
        centers.iter().map(|&c| self.start_point(topo, c)).collect()
    }

    /// A chain structure used to lay out root starts: slot 2 fixed, every
    /// later slot hanging off its two predecessors.
    fn chain_topology(&self) -> TopologyAssignment {
        let k = self.cfg.synthesis.k;
        let mut topo = TopologyAssignment::empty(k);
        for i in 2..=k {
            if i == 2 {
                topo.set_fixed(i);
            } else {
                topo.set_movable(i, i - 1, i - 2);
            }
        }
        with_witness_fluxes(topo).expect("chain topology is flux feasible")
    }

    /// A non-degenerate guess around `c`: a small motor circle, the
    /// end-effector on the target and every other slot at its own offset,
    /// with link vectors consistent with `topo`.
    fn start_point(&self, topo: &TopologyAssignment, c: Vec2) -> Vec<f64> {
        let cfg = &self.cfg.synthesis;
        let (k, t, b) = (cfg.k, cfg.t, cfg.box_side);
        let motor = MotorSpec::rotary(
            c,
            0.1 * b,
            if topo.d {
                Spin::CounterClockwise
            } else {
                Spin::Clockwise
            },
        );
        let times = sample_times(t);
        let centroid = self.target.centroid();
        let positions: Vec<Vec<Vec2>> = (1..=k)
            .map(|i| {
                (0..t)
                    .map(|q| {
                        let s = self.target.samples()[q];
                        match i {
                            1 => motor_position(&motor, times[q]),
                            _ if i == k => s,
                            _ => {
                                c + Vec2::from_angle(2.1 * i as f64) * (0.15 * b)
                                    + (s - centroid) * 0.3
                            }
                        }
                    })
                    .collect()
            })
            .collect();
        design_values(&self.model, cfg, topo, &positions, &motor)
            .into_iter()
            .zip(&self.model.variables)
            .map(|(v, var)| if v.is_finite() { v } else { 0.0 }.clamp(var.lb, var.ub))
            .collect()
    }

    fn solve_node(&self, node: &Node, incumbent: Option<f64>) -> NodeResult {
        let mut log = NodeLog {
            node_id: node.id,
            parent_id: node.parent,
            depth: node.depth,
            decision: node.decision.map(|(d, v)| format!("{d}={}", u8::from(v))),
            phase1_violation: None,
            phase2_objective: None,
            pruned_reason: None,
            propagation_conflict: false,
            incumbent,
        };
        let pruned = |mut log: NodeLog, reason| {
            log.pruned_reason = Some(reason);
            NodeResult {
                log,
                candidate: None,
                children: Vec::new(),
            }
        };
        let ext = match propagate(&node.assignment) {
            Propagation::Extended(e) => e,
            Propagation::Conflict(_) => {
                log.propagation_conflict = true;
                return pruned(log, PruneReason::Conflict);
            }
        };
        let p = NlpProblem::new(&self.model, &self.fixings(&ext, node));
        // the root and the node that completes the topology also try the
        // seeded starts
        let topo = self.complete(&ext);
        let completes = topo.is_some() && node.blocks.is_empty();
        let mut starts: Vec<Vec<f64>> = node.warm.iter().map(|w| w.as_ref().clone()).collect();
        match (&node.warm, &topo) {
            (None, _) => starts.extend(self.seeded_starts(&self.chain_topology())),
            (Some(_), Some(t)) if completes => starts.extend(self.seeded_starts(t)),
            _ => {}
        }
        // best (phase I, phase II) pair over the starts
        let mut best: Option<(NlpResult, NlpResult)> = None;
        let mut least_violation = f64::INFINITY;
        for x0 in &starts {
            let Ok(r1) = solve_phase1(&p, x0, &self.nlp) else {
                continue;
            };
            least_violation = least_violation.min(r1.max_violation);
            if r1.status != NlpStatus::Feasible {
                continue;
            }
            let Ok(r2) = solve_phase2(&p, &r1.x, &self.nlp) else {
                continue;
            };
            if best
                .as_ref()
                .is_none_or(|(_, b)| r2.objective < b.objective)
            {
                best = Some((r1, r2));
            }
        }
        let Some((r1, r2)) = best else {
            log.phase1_violation = least_violation.is_finite().then_some(least_violation);
            return pruned(log, PruneReason::Infeasible);
        };
        log.phase1_violation = Some(r1.max_violation);
        log.phase2_objective = Some(r2.objective);
        if incumbent.is_some_and(|inc| r2.objective >= inc - PRUNE_TOL) {
            return pruned(log, PruneReason::Bound);
        }
        let candidate = topo.and_then(|topo| self.certify(&topo, &r2.x));
        let children = self.children(&ext, node, Arc::new(r1.x), r2.objective);
        NodeResult {
            log,
            candidate,
            children,
        }
    }

    /// Read a linkage from a node solution, polish it, and keep the first
    /// of (polished, raw) that the exact model accepts.
    fn certify(&self, topo: &TopologyAssignment, x: &[f64]) -> Option<(Linkage, f64)> {
        let raw = extract_linkage(&self.model, &self.cfg.synthesis, topo, x).ok()?;
        let polished = polish_linkage(&raw, &self.target, POLISH_ITERS);
        [polished, raw]
            .into_iter()
            .find_map(|l| self.admissible(&l).map(|v| (l, v)))
    }

    /// Objective of `linkage` when its traced values satisfy the exact
    /// model.
    fn admissible(&self, linkage: &Linkage) -> Option<f64> {
        let x = linkage_values(&self.model, &self.cfg.synthesis, linkage).ok()?;
        let v = validate_with_tol(&self.model, &x, CERTIFY_TOL).ok()?;
        if !v.is_satisfied() {
            return None;
        }
        objective(linkage, &self.target, self.cfg.synthesis.lambda)
            .ok()
            .map(|o| o.total)
    }

    /// Best motor-only design: a circle fitted to the target in both
    /// directions, polished.
    fn motor_only(&self) -> Option<(Linkage, f64)> {
        let c = self.target.centroid();
        let s = self.target.samples();
        let r = (s.iter().map(|p| p.distance(c).powi(2)).sum::<f64>() / s.len() as f64).sqrt();
        if r <= 0.0 {
            return None;
        }
        [Spin::Clockwise, Spin::CounterClockwise]
            .into_iter()
            .filter_map(|spin| {
                Linkage::motor_only(MotorSpec::rotary(c, r, spin), self.cfg.synthesis.box_side).ok()
            })
            .map(|l| polish_linkage(&l, &self.target, POLISH_ITERS))
            .filter_map(|l| {
                let v = objective(&l, &self.target, self.cfg.synthesis.lambda)
                    .ok()?
                    .total;
                Some((l, v))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

struct Shared {
    queue: BTreeMap<QueueKey, Node>,
    incumbent: Option<Incumbent>,
    stats: BbStats,
    log: Vec<NodeLog>,
    busy: usize,
    solved: usize,
    next_id: usize,
    stop: Option<BbStatus>,
}

struct Search<'a, F> {
    ctx: Context,
    control: &'a Control,
    started: Instant,
    budget: usize,
    state: Mutex<(Shared, F)>,
    wake: Condvar,
}

impl<F: FnMut(BbEvent) + Send> Search<'_, F> {
    fn push(&self, shared: &mut Shared, mut node: Node) {
        node.id = shared.next_id;
        shared.next_id += 1;
        shared.stats.created += 1;
        shared
            .queue
            .insert(queue_key(self.ctx.cfg.selection, &node), node);
    }

    fn offer(
        &self,
        shared: &mut Shared,
        observer: &mut F,
        linkage: &Linkage,
        value: f64,
        node: Option<usize>,
    ) {
        if shared
            .incumbent
            .as_ref()
            .is_some_and(|inc| value >= inc.objective)
        {
            return;
        }
        let Ok(solution) = Solution::new(
            Provenance::Bb(self.ctx.cfg.clone()),
            None,
            linkage,
            &self.ctx.target,
            self.ctx.cfg.synthesis.lambda,
        ) else {
            return;
        };
        let inc = Incumbent {
            solution,
            objective: value,
            found_at_node: node,
            wall_clock: self.started.elapsed(),
        };
        shared.stats.incumbent_updates += 1;
        observer(BbEvent::Incumbent(&inc));
        shared.incumbent = Some(inc);
    }

    fn record(&self, shared: &mut Shared, observer: &mut F, log: NodeLog) {
        match log.pruned_reason {
            Some(r) => {
                shared.stats.pruned += 1;
                *shared.stats.prune_reasons.entry(r).or_default() += 1;
            }
            None => shared.stats.explored += 1,
        }
        observer(BbEvent::Node(&log));
        shared.log.push(log);
    }

    fn worker(&self) {
        loop {
            let node = {
                let mut guard = self.state.lock().expect("search state lock");
                loop {
                    let (shared, observer) = &mut *guard;
                    if shared.stop.is_some() {
                        return;
                    }
                    if let Some(why) = self.control.interrupted() {
                        shared.stop = Some(match why {
                            Interrupt::Cancelled => BbStatus::Cancelled,
                            Interrupt::TimeLimit => BbStatus::BudgetExhausted,
                        });
                        self.wake.notify_all();
                        return;
                    }
                    if shared.solved >= self.budget {
                        shared.stop = Some(if shared.queue.is_empty() && shared.busy == 0 {
                            BbStatus::Completed
                        } else {
                            BbStatus::BudgetExhausted
                        });
                        self.wake.notify_all();
                        return;
                    }
                    if let Some((_, node)) = shared.queue.pop_first() {
                        let floor = shared.incumbent.as_ref().map(|i| i.objective);
                        if floor.is_some_and(|v| v - PRUNE_TOL <= 0.0) {
                            let log = NodeLog {
                                node_id: node.id,
                                parent_id: node.parent,
                                depth: node.depth,
                                decision: node
                                    .decision
                                    .map(|(d, v)| format!("{d}={}", u8::from(v))),
                                phase1_violation: None,
                                phase2_objective: None,
                                pruned_reason: Some(PruneReason::Floor),
                                propagation_conflict: false,
                                incumbent: floor,
                            };
                            self.record(shared, observer, log);
                            continue;
                        }
                        shared.busy += 1;
                        shared.solved += 1;
                        let inc = shared.incumbent.as_ref().map(|i| i.objective);
                        break (node, inc);
                    }
                    if shared.busy == 0 {
                        shared.stop = Some(BbStatus::Completed);
                        self.wake.notify_all();
                        return;
                    }
                    guard = self.wake.wait(guard).expect("search state lock");
                }
            };
            let (node, inc) = node;
            let result = self.ctx.solve_node(&node, inc);
            let mut guard = self.state.lock().expect("search state lock");
            let (shared, observer) = &mut *guard;
            shared.busy -= 1;
            if let Some((linkage, value)) = &result.candidate {
                self.offer(shared, observer, linkage, *value, Some(node.id));
            }
            self.record(shared, observer, result.log);
            for child in result.children {
                self.push(shared, child);
            }
            self.wake.notify_all();
        }
    }
}

/// Single-worker search, deterministic for a given configuration when no
/// time limit is set.
pub fn solve(
    cfg: &BbConfig,
    control: &Control,
    observer: impl FnMut(BbEvent) + Send,
) -> Result<BbOutcome, BbError> {
    let cfg = BbConfig {
        workers: 1,
        ..cfg.clone()
    };
    solve_parallel(&cfg, control, observer)
}

/// Search with `cfg.workers` threads sharing one queue and one incumbent.
/// Each worker contributes `cfg.node_limit` node solves to the budget.
pub fn solve_parallel(
    cfg: &BbConfig,
    control: &Control,
    observer: impl FnMut(BbEvent) + Send,
) -> Result<BbOutcome, BbError> {
    cfg.validate()?;
    let ctx = Context::new(cfg, control);
    let mut root_assignment = PartialAssignment::new(cfg.synthesis.k);
    if !ctx.has_direction {
        root_assignment.direction = Some(false);
    }
    let root = Node {
        id: 0,
        parent: None,
        depth: 0,
        decision: None,
        assignment: root_assignment,
        blocks: BTreeMap::new(),
        warm: None,
        priority: 0.0,
    };
    let shared = Shared {
        queue: BTreeMap::new(),
        incumbent: None,
        stats: BbStats::default(),
        log: Vec::new(),
        busy: 0,
        solved: 0,
        next_id: 0,
        stop: None,
    };
    let search = Search {
        ctx,
        control,
        started: Instant::now(),
        budget: cfg.node_limit.saturating_mul(cfg.workers),
        state: Mutex::new((shared, observer)),
        wake: Condvar::new(),
    };
    {
        let mut guard = search.state.lock().expect("search state lock");
        let (shared, observer) = &mut *guard;
        if let Some((l, v)) = search.ctx.motor_only() {
            search.offer(shared, observer, &l, v, None);
        }
        search.push(shared, root);
    }
    if cfg.workers == 1 {
        search.worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..cfg.workers {
                s.spawn(|| search.worker());
            }
        });
    }
    let (mut shared, _) = search.state.into_inner().expect("search state lock");
    shared.stats.open = shared.queue.len();
    Ok(BbOutcome {
        status: shared.stop.unwrap_or(BbStatus::Completed),
        incumbent: shared.incumbent,
        stats: shared.stats,
        log: shared.log,
    })
}
