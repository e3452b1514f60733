use serde::{Deserialize, Serialize};

use super::ir::{eval_quadratic, ModelIR, SosKind, VarKind};
use super::sos::sos_satisfied;

/// Default tolerance on scaled residuals.
pub const VALIDATION_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ResidualKind {
    Bound,
    Integrality,
    Linear,
    Quadratic,
    Sos,
}

/// One violated row, bound or set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Residual {
    pub kind: ResidualKind,
    /// Constraint, variable or set name.
    pub name: String,
    /// Position of the row, variable or set in its list.
    pub index: usize,
    /// Unscaled amount of violation.
    pub raw: f64,
    /// Violation divided by the row's magnitude (at least 1).
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "camelCase")]
pub enum Validation {
    Satisfied,
    Violated { violations: Vec<Residual> },
}

impl Validation {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, Validation::Satisfied)
    }

    pub fn violations(&self) -> &[Residual] {
        match self {
            Validation::Satisfied => &[],
            Validation::Violated { violations } => violations,
        }
    }

    pub fn worst(&self) -> f64 {
        self.violations()
            .iter()
            .map(|r| r.residual)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidateError {
    #[error("no value for variable {name}")]
    MissingVariable { name: String },
}

/// Evaluate every bound, row and set of `model` at `x` with the default
/// tolerance.
pub fn validate(model: &ModelIR, x: &[f64]) -> Result<Validation, ValidateError> {
    validate_with_tol(model, x, VALIDATION_TOL)
}

/// Evaluate every bound, row and set of `model` at `x`.
///
/// Row residuals are scaled by `max(1, |rhs|, Σ|terms at x|)`. SOS sets are
/// checked on their supports directly; their encodings are ordinary rows.
pub fn validate_with_tol(
    model: &ModelIR,
    x: &[f64],
    tol: f64,
) -> Result<Validation, ValidateError> {
    if x.len() < model.variables.len() {
        let name = model.variables[x.len()].name.clone();
        return Err(ValidateError::MissingVariable { name });
    }
    if let Some(i) = x
        .iter()
        .take(model.variables.len())
        .position(|v| !v.is_finite())
    {
        return Err(ValidateError::MissingVariable {
            name: model.variables[i].name.clone(),
        });
    }
    let mut out = Vec::new();
    let mut push = |kind, name: &str, index, raw: f64, scale: f64| {
        let residual = raw / scale.max(1.0);
        if residual > tol {
            out.push(Residual {
                kind,
                name: name.to_string(),
                index,
                raw,
                residual,
            });
        }
    };
    for (i, v) in model.variables.iter().enumerate() {
        let val = x[i];
        let raw = (v.lb - val).max(val - v.ub).max(0.0);
        push(
            ResidualKind::Bound,
            &v.name,
            i,
            raw,
            v.lb.abs().max(v.ub.abs()).min(1e300),
        );
        if v.kind == VarKind::Binary {
            let frac = (val - val.round()).abs();
            push(ResidualKind::Integrality, &v.name, i, frac, 1.0);
        }
    }
    for (i, c) in model.linear_constraints.iter().enumerate() {
        let lhs: f64 = c.terms.iter().map(|&(j, a)| a * x[j]).sum();
        let mag: f64 = c
            .terms
            .iter()
            .map(|&(j, a)| (a * x[j]).abs())
            .sum::<f64>()
            .max(c.rhs.abs());
        push(
            ResidualKind::Linear,
            &c.name,
            i,
            c.sense.violation(lhs, c.rhs),
            mag,
        );
    }
    for (i, c) in model.quadratic_constraints.iter().enumerate() {
        let lhs = eval_quadratic(&c.quad, &c.lin, x);
        let mag: f64 = c
            .quad
            .iter()
            .map(|&(a, b, q)| (q * x[a] * x[b]).abs())
            .sum::<f64>()
            + c.lin.iter().map(|&(j, a)| (a * x[j]).abs()).sum::<f64>();
        push(
            ResidualKind::Quadratic,
            &c.name,
            i,
            c.sense.violation(lhs, c.rhs),
            mag.max(c.rhs.abs()),
        );
    }
    for (i, s) in model.sos_sets.iter().enumerate() {
        let vals: Vec<f64> = s.vars.iter().map(|&v| x[v]).collect();
        if !sos_satisfied(s.kind, &vals, tol) {
            let mut sorted: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let keep = match s.kind {
                SosKind::Sos1 => 1,
                SosKind::Sos2 => 2,
            };
            let raw = sorted[keep.min(sorted.len())..]
                .iter()
                .sum::<f64>()
                .max(tol * 2.0);
            push(ResidualKind::Sos, &s.name, i, raw, 1.0);
        }
    }
    Ok(if out.is_empty() {
        Validation::Satisfied
    } else {
        Validation::Violated { violations: out }
    })
}
