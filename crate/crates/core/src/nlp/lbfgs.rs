//! Limited-memory quasi-Newton minimisation over a box, with projected
//! backtracking line search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Sufficient-decrease constant of every line search in this module.
pub const ARMIJO_C: f64 = 1e-4;
const MEMORY: usize = 8;
const MAX_HALVINGS: usize = 30;

/// One accepted step: `f1 ≤ f0 + c·slope` with `slope = ⟨∇f(x0), x1 − x0⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LineStep {
    pub alpha: f64,
    pub f0: f64,
    pub f1: f64,
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InnerOutcome {
    pub iterations: usize,
    pub value: f64,
    pub projected_gradient: f64,
    pub converged: bool,
    pub steps: Vec<LineStep>,
}

/// `‖P(y − g) − y‖∞` for the box `lo..hi`.
pub fn projected_gradient_norm(y: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..y.len() {
        let p = (y[i] - g[i]).clamp(lo[i], hi[i]);
        m = m.max((p - y[i]).abs());
    }
    m
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimise `f` over `lo ≤ y ≤ hi` starting from `y`, which is updated in
/// place. `f` writes the gradient into its second argument and returns the
/// value; non-finite values are treated as failed trial points.
pub fn minimize_box<F>(
    mut f: F,
    y: &mut [f64],
    lo: &[f64],
    hi: &[f64],
    max_iter: usize,
    tol: f64,
) -> InnerOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = y.len();
    for i in 0..n {
        y[i] = y[i].clamp(lo[i], hi[i]);
    }
    let mut g = vec![0.0; n];
    let mut fx = f(y, &mut g);
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
    let mut steps = Vec::new();
    let (mut trial, mut gt, mut d) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut iterations = 0;
    let mut pg = projected_gradient_norm(y, &g, lo, hi);
    while iterations < max_iter && fx.is_finite() && pg > tol {
        iterations += 1;
        // variables held at a bound by the gradient stay out of the step
        let free: Vec<bool> = (0..n)
            .map(|i| !((y[i] <= lo[i] && g[i] > 0.0) || (y[i] >= hi[i] && g[i] < 0.0)))
            .collect();
        for i in 0..n {
            d[i] = if free[i] { -g[i] } else { 0.0 };
        }
        two_loop(&memory, &mut d, &free);
        if dot(&d, &g) >= 0.0 {
            memory.clear();
            for i in 0..n {
                d[i] = if free[i] { -g[i] } else { 0.0 };
            }
        }
        let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if dmax == 0.0 {
            break;
        }
        let mut alpha = if memory.is_empty() {
            (0.05 / dmax).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            for i in 0..n {
                trial[i] = (y[i] + alpha * d[i]).clamp(lo[i], hi[i]);
            }
            let slope: f64 = (0..n).map(|i| g[i] * (trial[i] - y[i])).sum();
            if slope >= 0.0 {
                break;
            }
            let ft = f(&trial, &mut gt);
            if ft.is_finite() && ft <= fx + ARMIJO_C * slope {
                accepted = Some(LineStep {
                    alpha,
                    f0: fx,
                    f1: ft,
                    slope,
                });
                break;
            }
            alpha *= 0.5;
        }
        let Some(step) = accepted else {
            if memory.is_empty() {
                break;
            }
            memory.clear();
            continue;
        };
        steps.push(step);
        let s: Vec<f64> = (0..n).map(|i| trial[i] - y[i]).collect();
        let yv: Vec<f64> = (0..n).map(|i| gt[i] - g[i]).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&yv, &yv).sqrt() && sy > 0.0 {
            if memory.len() == MEMORY {
                memory.pop_front();
            }
            memory.push_back((s, yv, 1.0 / sy));
        }
        y.copy_from_slice(&trial);
        g.copy_from_slice(&gt);
        let stalled = (fx - step.f1).abs() <= 1e-16 * (1.0 + fx.abs());
        fx = step.f1;
        pg = projected_gradient_norm(y, &g, lo, hi);
        if stalled {
            break;
        }
    }
    InnerOutcome {
        iterations,
        value: fx,
        projected_gradient: pg,
        converged: pg <= tol,
        steps,
    }
}

/// Replace `d = −g` (restricted to free variables) by `−H·g`.
fn two_loop(memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, d: &mut [f64], free: &[bool]) {
    if memory.is_empty() {
        return;
    }
    let masked = |v: &[f64], w: &[f64]| -> f64 {
        (0..v.len()).filter(|&i| free[i]).map(|i| v[i] * w[i]).sum()
    };
    let mut a = vec![0.0; memory.len()];
    for (k, (s, y, rho)) in memory.iter().enumerate().rev() {
        a[k] = rho * masked(s, d);
        for i in 0..d.len() {
            if free[i] {
                d[i] -= a[k] * y[i];
            }
        }
    }
    let (s, y, _) = memory.back().unwrap();
    let yy = masked(y, y);
    let gamma = if yy > 0.0 { masked(s, y) / yy } else { 1.0 };
    let gamma = if gamma.is_finite() && gamma > 0.0 {
        gamma
    } else {
        1.0
    };
    d.iter_mut().for_each(|v| *v *= gamma);
    for (k, (s, y, rho)) in memory.iter().enumerate() {
        let b = rho * masked(y, d);
        for i in 0..d.len() {
            if free[i] {
                d[i] += (a[k] - b) * s[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_in_a_box() {
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let mut y = vec![-1.2, 1.0];
        let out = minimize_box(f, &mut y, &[-2.0, -2.0], &[2.0, 2.0], 500, 1e-9);
        assert!(out.converged, "{out:?}");
        assert!((y[0] - 1.0).abs() < 1e-6 && (y[1] - 1.0).abs() < 1e-6);
        for s in &out.steps {
            assert!(s.f1 <= s.f0 + ARMIJO_C * s.slope);
        }
    }

    #[test]
    fn active_bound_is_respected() {
        // minimum of (x − 3)² over [0, 1] sits on the upper bound
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - 3.0);
            (x[0] - 3.0).powi(2)
        };
        let mut y = vec![0.2];
        let out = minimize_box(f, &mut y, &[0.0], &[1.0], 100, 1e-12);
        assert_eq!(y[0], 1.0);
        assert!(out.converged);
    }
}
