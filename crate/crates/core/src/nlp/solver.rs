use serde::{Deserialize, Serialize};

use super::lbfgs::{minimize_box, projected_gradient_norm, LineStep};
use super::problem::{NlpProblem, RowKind};
use crate::control::Control;

#[derive(Clone, Debug)]
pub struct NlpSettings {
    pub max_outer: usize,
    pub max_inner: usize,
    /// Bound on the scaled violation of every row.
    pub feas_tol: f64,
    /// Relative bound on the projected gradient in phase II.
    pub stationarity_tol: f64,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub max_penalty: f64,
    /// Keep every line-search step in the log.
    pub record_steps: bool,
    pub control: Control,
}

impl Default for NlpSettings {
    fn default() -> Self {
        NlpSettings {
            max_outer: 50,
            max_inner: 200,
            feas_tol: 1e-6,
            stationarity_tol: 1e-5,
            initial_penalty: 10.0,
            penalty_growth: 5.0,
            max_penalty: 1e8,
            record_steps: false,
            control: Control::default(),
        }
    }
}

impl NlpSettings {
    fn interrupted(&self) -> bool {
        self.control.interrupted().is_some()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NlpStatus {
    Feasible,
    Infeasible,
    IterationLimit,
}

/// One outer iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IterationRecord {
    pub outer: usize,
    /// Phase merit: squared violation in phase I, objective in phase II.
    pub merit: f64,
    pub objective: f64,
    pub violation: f64,
    pub penalty: f64,
    pub inner_iterations: usize,
    /// Largest scaled coordinate change of the outer iteration.
    pub step: f64,
    /// Whether the iterate improved the best point so far.
    pub accepted: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub line_steps: Vec<LineStep>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NlpResult {
    pub status: NlpStatus,
    /// Values for every model variable.
    pub x: Vec<f64>,
    pub max_violation: f64,
    pub objective: f64,
    pub iterations: usize,
    pub stationarity: f64,
    /// Whether the area rows were flipped to the opposite orientation.
    pub flipped_area: bool,
    pub log: Vec<IterationRecord>,
}

impl NlpResult {
    pub fn log_json(&self) -> String {
        serde_json::to_string(&self.log).expect("log serializes")
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NlpError {
    #[error("starting point violates the constraints by {violation:e}, more than ten times the tolerance")]
    InfeasibleStart { violation: f64 },
    #[error("starting point has {found} entries, the model has {expected}")]
    BadStart { expected: usize, found: usize },
}

struct Multipliers {
    lambda: Vec<f64>,
    rho: f64,
}

/// Value and gradient of the augmented Lagrangian with objective weight
/// `wf`.
fn lagrangian(p: &NlpProblem, y: &[f64], mult: &Multipliers, wf: f64, grad: &mut [f64]) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut v = 0.0;
    if wf != 0.0 {
        v += wf * p.objective.value(y);
        p.objective.add_grad(y, wf, grad);
    }
    let rho = mult.rho;
    for (r, row) in p.rows.iter().enumerate() {
        let c = row.poly.value(y);
        let l = mult.lambda[r];
        let w = match row.kind {
            RowKind::Ge if c - l / rho > 0.0 => {
                v -= l * l / (2.0 * rho);
                0.0
            }
            _ => {
                v += -l * c + 0.5 * rho * c * c;
                -l + rho * c
            }
        };
        if w != 0.0 {
            row.poly.add_grad(y, w, grad);
        }
    }
    v
}

fn update_multipliers(p: &NlpProblem, y: &[f64], mult: &mut Multipliers) {
    for (r, row) in p.rows.iter().enumerate() {
        let c = row.poly.value(y);
        let l = mult.lambda[r] - mult.rho * c;
        mult.lambda[r] = match row.kind {
            RowKind::Eq => l,
            RowKind::Ge => l.max(0.0),
        };
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    One,
    Two,
}

fn check_start(p: &NlpProblem, x0: &[f64]) -> Result<(), NlpError> {
    let expected = p.model_len();
    if x0.len() < expected {
        return Err(NlpError::BadStart {
            expected,
            found: x0.len(),
        });
    }
    Ok(())
}

/// Drive the constraint violation below the tolerance, ignoring the
/// objective.
pub fn solve_phase1(
    p: &NlpProblem,
    x0: &[f64],
    settings: &NlpSettings,
) -> Result<NlpResult, NlpError> {
    check_start(p, x0)?;
    Ok(run(p, p.to_scaled(x0), settings, Phase::One))
}

/// Phase I for both orientations of the area rows; the result with the
/// smaller violation wins and records which orientation it used.
pub fn solve_phase1_both(
    p: &NlpProblem,
    x0: &[f64],
    settings: &NlpSettings,
) -> Result<NlpResult, NlpError> {
    let a = solve_phase1(p, x0, settings)?;
    if a.status == NlpStatus::Feasible || !p.has_area_rows() {
        return Ok(a);
    }
    let mut b = solve_phase1(&p.with_flipped_area(), x0, settings)?;
    b.flipped_area = true;
    Ok(if b.max_violation < a.max_violation {
        b
    } else {
        a
    })
}

/// Locally minimise the objective from a (nearly) feasible point.
pub fn solve_phase2(
    p: &NlpProblem,
    x0: &[f64],
    settings: &NlpSettings,
) -> Result<NlpResult, NlpError> {
    check_start(p, x0)?;
    let y = p.to_scaled(x0);
    let violation = p.start_violation(x0);
    if !(violation <= 10.0 * settings.feas_tol) {
        return Err(NlpError::InfeasibleStart { violation });
    }
    Ok(run(p, y, settings, Phase::Two))
}

fn run(p: &NlpProblem, mut y: Vec<f64>, settings: &NlpSettings, phase: Phase) -> NlpResult {
    let wf = if phase == Phase::Two {
        p.objective_weight
    } else {
        0.0
    };
    let mut mult = Multipliers {
        lambda: vec![0.0; p.row_count()],
        rho: settings.initial_penalty,
    };
    let merit = |y: &[f64]| match phase {
        Phase::One => p.violation_merit(y),
        Phase::Two => p.objective(y),
    };
    let mut grad = vec![0.0; p.dim()];
    let stationarity = |y: &[f64], mult: &Multipliers, grad: &mut Vec<f64>| {
        lagrangian(p, y, mult, wf, grad);
        projected_gradient_norm(y, grad, &p.lower, &p.upper)
    };
    let stationary_enough =
        |s: f64, y: &[f64]| s <= settings.stationarity_tol * (1.0 + (wf * p.objective(y)).abs());

    let mut viol = p.max_violation(&y);
    let mut best = y.clone();
    let mut best_merit = merit(&y);
    let mut best_viol = viol;
    let mut have_best = phase == Phase::One || viol <= settings.feas_tol;
    let mut log = Vec::new();
    let mut status = NlpStatus::IterationLimit;
    let mut stat = stationarity(&y, &mult, &mut grad);

    let done_at_start = match phase {
        Phase::One => viol <= settings.feas_tol,
        Phase::Two => viol <= settings.feas_tol && stationary_enough(stat, &y),
    };
    if done_at_start || p.fixed_violation() > settings.feas_tol {
        status = if done_at_start {
            NlpStatus::Feasible
        } else {
            NlpStatus::Infeasible
        };
    } else {
        let mut stalled = 0;
        let target = (0.1 * settings.stationarity_tol).max(1e-9);
        let mut omega: f64 = 1e-2;
        if phase == Phase::Two {
            estimate_multipliers(p, &y, wf, &mut mult);
        }
        for outer in 1..=settings.max_outer {
            if settings.interrupted() {
                break;
            }
            let before = y.clone();
            let inner = minimize_box(
                |v, g| lagrangian(p, v, &mult, wf, g),
                &mut y,
                &p.lower,
                &p.upper,
                settings.max_inner,
                omega.max(target),
            );
            let prev = viol;
            viol = p.max_violation(&y);
            // an unfinished subproblem says nothing about the penalty or the
            // multipliers; the next outer iteration resumes it. Phase I also
            // counts a stalled subproblem as finished so that an
            // unreachable row set still drives the penalty to its cap.
            let finished =
                inner.converged || (phase == Phase::One && inner.iterations < settings.max_inner);
            if finished {
                update_multipliers(p, &y, &mut mult);
                if viol > 0.25 * prev && viol > settings.feas_tol {
                    mult.rho = (mult.rho * settings.penalty_growth).min(settings.max_penalty);
                }
                omega *= 0.1;
            }
            let m = merit(&y);
            let accepted = match phase {
                Phase::One => m < best_merit,
                Phase::Two => {
                    viol <= settings.feas_tol
                        && (!have_best || m < best_merit || best_viol > settings.feas_tol)
                }
            };
            if accepted {
                best.clone_from(&y);
                best_merit = m;
                best_viol = viol;
                have_best = true;
            }
            stat = stationarity(&y, &mult, &mut grad);
            let step = y
                .iter()
                .zip(&before)
                .fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
            log.push(IterationRecord {
                outer,
                merit: m,
                objective: p.objective(&y),
                violation: viol,
                penalty: mult.rho,
                inner_iterations: inner.iterations,
                step,
                accepted,
                line_steps: if settings.record_steps {
                    inner.steps
                } else {
                    Vec::new()
                },
            });
            match phase {
                Phase::One if viol <= settings.feas_tol => {
                    status = NlpStatus::Feasible;
                    break;
                }
                Phase::Two if viol <= settings.feas_tol && stationary_enough(stat, &y) => {
                    status = NlpStatus::Feasible;
                    break;
                }
                _ => {}
            }
            // no progress at the largest penalty means the rows cannot all hold
            if phase == Phase::One {
                if accepted && viol < 0.99 * prev {
                    stalled = 0;
                } else {
                    stalled += 1;
                }
                if mult.rho >= settings.max_penalty && stalled >= 3 {
                    status = NlpStatus::Infeasible;
                    break;
                }
            }
        }
    }
    if phase == Phase::Two && status == NlpStatus::Feasible {
        // the last iterate converged; it is also the best feasible one
        // unless an earlier feasible point had a lower objective
        if p.objective(&y) <= best_merit || best_viol > settings.feas_tol {
            best.clone_from(&y);
        }
    } else if phase == Phase::One && status == NlpStatus::Feasible {
        best.clone_from(&y);
    }
    if !have_best {
        best.clone_from(&y);
    }
    if p.max_violation(&best) <= 10.0 * settings.feas_tol {
        tighten(p, &mut best);
    }
    let final_viol = p.max_violation(&best);
    let final_stat = stationarity(&best, &mult, &mut grad);
    NlpResult {
        status,
        x: p.to_full(&best),
        max_violation: final_viol,
        objective: p.objective(&best),
        iterations: log.len(),
        stationarity: final_stat,
        flipped_area: false,
        log,
    }
}

/// Gauss-Newton projection onto the active rows: a few minimum-norm
/// corrections `Δy = −Jᵀ(JJᵀ)⁻¹c`, each solved matrix-free by conjugate
/// gradients. Moves a point that already meets the tolerance much closer
/// to the constraint surface so that it also passes checks scaled
/// differently from ours. Steps that do not reduce the violation are
/// discarded.
fn tighten(p: &NlpProblem, y: &mut Vec<f64>) {
    const TARGET: f64 = 1e-13;
    const MARGIN: f64 = 1e-12;
    let n = p.dim();
    let mut viol = p.max_violation(y);
    for _ in 0..6 {
        if viol <= TARGET {
            break;
        }
        let movable: Vec<bool> = (0..n)
            .map(|i| y[i] > p.lower[i] && y[i] < p.upper[i])
            .collect();
        let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
        let mut g = vec![0.0; n];
        for row in &p.rows {
            let c = row.poly.value(y);
            let r = match row.kind {
                RowKind::Eq => c,
                RowKind::Ge if c < MARGIN => c - MARGIN,
                RowKind::Ge => continue,
            };
            row.poly.add_grad(y, 1.0, &mut g);
            let jr: Vec<(usize, f64)> = take_sparse(&row.poly, &mut g)
                .into_iter()
                .filter(|&(i, v)| movable[i] && v != 0.0)
                .collect();
            if !jr.is_empty() {
                rows.push((jr, r));
            }
        }
        if rows.is_empty() {
            break;
        }
        let z = cg_normal(&rows, n);
        let mut trial = y.clone();
        for ((jr, _), zi) in rows.iter().zip(&z) {
            for &(i, a) in jr {
                trial[i] -= a * zi;
            }
        }
        for i in 0..n {
            trial[i] = trial[i].clamp(p.lower[i], p.upper[i]);
        }
        let v = p.max_violation(&trial);
        if !(v < viol) {
            break;
        }
        *y = trial;
        viol = v;
    }
}

/// Least-squares multipliers `argmin ‖wf·∇f − Jᵀλ‖` over the equality rows
/// and the nearly active inequality rows, with inequality multipliers
/// clipped at zero.
fn estimate_multipliers(p: &NlpProblem, y: &[f64], wf: f64, mult: &mut Multipliers) {
    let n = p.dim();
    let mut gf = vec![0.0; n];
    p.objective.add_grad(y, wf, &mut gf);
    let mut g = vec![0.0; n];
    let mut picked = Vec::new();
    let mut rows = Vec::new();
    for (r, row) in p.rows.iter().enumerate() {
        if row.kind == RowKind::Ge && row.poly.value(y) > 1e-6 {
            continue;
        }
        row.poly.add_grad(y, 1.0, &mut g);
        let jr = take_sparse(&row.poly, &mut g);
        let rhs: f64 = jr.iter().map(|&(i, a)| a * gf[i]).sum();
        picked.push(r);
        rows.push((jr, rhs));
    }
    if rows.is_empty() {
        return;
    }
    let lambda = cg_normal(&rows, n);
    for (r, l) in picked.into_iter().zip(lambda) {
        mult.lambda[r] = if p.rows[r].kind == RowKind::Ge {
            l.max(0.0)
        } else {
            l
        };
    }
}

/// Sparse copy of the entries of `g` touched by `poly`, zeroing them.
fn take_sparse(poly: &super::problem::Poly, g: &mut [f64]) -> Vec<(usize, f64)> {
    let mut idx: Vec<usize> = poly
        .lin
        .iter()
        .map(|t| t.0)
        .chain(poly.quad.iter().flat_map(|t| [t.0, t.1]))
        .collect();
    idx.sort_unstable();
    idx.dedup();
    idx.into_iter()
        .map(|i| (i, std::mem::take(&mut g[i])))
        .collect()
}

/// Solve `(JJᵀ + δI) z = r` by conjugate gradients.
fn cg_normal(rows: &[(Vec<(usize, f64)>, f64)], n: usize) -> Vec<f64> {
    let m = rows.len();
    let delta = 1e-14;
    let mut tmp = vec![0.0; n];
    let mut apply = |v: &[f64], out: &mut [f64]| {
        tmp.iter_mut().for_each(|t| *t = 0.0);
        for ((jr, _), vi) in rows.iter().zip(v) {
            for &(i, a) in jr {
                tmp[i] += a * vi;
            }
        }
        for (k, (jr, _)) in rows.iter().enumerate() {
            out[k] = jr.iter().map(|&(i, a)| a * tmp[i]).sum::<f64>() + delta * v[k];
        }
    };
    let b: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut z = vec![0.0; m];
    let mut r = b.clone();
    let mut d = r.clone();
    let mut ad = vec![0.0; m];
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    for _ in 0..(4 * m).max(50) {
        if rr.sqrt() <= 1e-15 * bnorm.max(1e-300) {
            break;
        }
        apply(&d, &mut ad);
        let dad: f64 = d.iter().zip(&ad).map(|(a, b)| a * b).sum();
        if dad <= 0.0 {
            break;
        }
        let alpha = rr / dad;
        for k in 0..m {
            z[k] += alpha * d[k];
            r[k] -= alpha * ad[k];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..m {
            d[k] = r[k] + beta * d[k];
        }
    }
    z
}
