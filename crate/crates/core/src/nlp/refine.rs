use super::lbfgs::{minimize_box, ARMIJO_C};
use crate::kinematics::{
    jacobian_adjoint, parameters, with_parameters, KinematicsError, Linkage, NodeDef, TargetCurve,
};

const MAX_HALVINGS: usize = 30;

/// Tracking error of `linkage`'s driving part, or `None` when it does not
/// trace.
fn tracking(linkage: &Linkage, target: &TargetCurve) -> Option<f64> {
    crate::kinematics::objective(linkage, target, 0.0)
        .ok()
        .map(|o| o.tracking)
}

fn split(linkage: &Linkage) -> (Linkage, Vec<NodeDef>) {
    let head = linkage.without_trailing_fixed();
    let tail = linkage.nodes()[head.len()..].to_vec();
    (head, tail)
}

fn rejoin(head: Linkage, tail: &[NodeDef]) -> Linkage {
    if tail.is_empty() {
        return head;
    }
    let mut nodes = head.nodes().to_vec();
    nodes.extend_from_slice(tail);
    Linkage::new_open(nodes, head.box_side()).expect("same structure as before")
}

/// One steepest-descent step on every continuous parameter with Armijo
/// backtracking. Trailing fixed nodes do not affect the end-effector and
/// are carried over untouched. Returns the input when no step decreases
/// the tracking error.
pub fn refine_linkage(linkage: &Linkage, target: &TargetCurve) -> Result<Linkage, KinematicsError> {
    let (head, tail) = split(linkage);
    let g = jacobian_adjoint(&head, target)?;
    let gmax = g.grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if gmax <= 1e-12 * (1.0 + g.value) {
        return Ok(linkage.clone());
    }
    let p0 = parameters(&head);
    let gg: f64 = g.grad.iter().map(|v| v * v).sum();
    let mut alpha = 0.1 * head.box_side() / gmax;
    for _ in 0..=MAX_HALVINGS {
        let p: Vec<f64> = p0.iter().zip(&g.grad).map(|(x, d)| x - alpha * d).collect();
        if let Ok(cand) = with_parameters(&head, &p) {
            if let Some(v) = tracking(&cand, target) {
                if v <= g.value - ARMIJO_C * alpha * gg {
                    return Ok(rejoin(cand, &tail));
                }
            }
        }
        alpha *= 0.5;
    }
    Ok(linkage.clone())
}

/// Quasi-Newton descent on the continuous parameters for up to `max_iter`
/// iterations. Never returns a design with a larger tracking error, and
/// returns the input unchanged when it does not trace.
pub fn polish_linkage(linkage: &Linkage, target: &TargetCurve, max_iter: usize) -> Linkage {
    let (head, tail) = split(linkage);
    let Some(start) = tracking(&head, target) else {
        return linkage.clone();
    };
    let b = head.box_side();
    let scale = 1.0 / (b * b);
    let mut y: Vec<f64> = parameters(&head).iter().map(|v| v / b).collect();
    let n = y.len();
    let f = |v: &[f64], grad: &mut [f64]| -> f64 {
        let p: Vec<f64> = v.iter().map(|x| x * b).collect();
        let Ok(cand) = with_parameters(&head, &p) else {
            return f64::INFINITY;
        };
        match jacobian_adjoint(&cand, target) {
            Ok(g) => {
                for (o, d) in grad.iter_mut().zip(&g.grad) {
                    *o = d * b * scale;
                }
                g.value * scale
            }
            Err(_) => f64::INFINITY,
        }
    };
    let (lo, hi) = (vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n]);
    minimize_box(f, &mut y, &lo, &hi, max_iter, 1e-12);
    let p: Vec<f64> = y.iter().map(|x| x * b).collect();
    match with_parameters(&head, &p) {
        Ok(cand) if tracking(&cand, target).map(|v| v <= start).unwrap_or(false) => {
            rejoin(cand, &tail)
        }
        _ => linkage.clone(),
    }
}
