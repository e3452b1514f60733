use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ir::{ModelIR, Sense, SosKind, VarKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Json,
    Lp,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExportOptions {
    /// Write the binary encodings of SOS sets as ordinary rows instead of
    /// an `SOS` section.
    pub inline_sos: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExportError {
    #[error("constraint {0} cannot be written: {1}")]
    UnrepresentableConstraint(String, String),
}

pub fn export(
    model: &ModelIR,
    format: ExportFormat,
    opts: ExportOptions,
) -> Result<Vec<u8>, ExportError> {
    match format {
        ExportFormat::Json => Ok(model.to_json().into_bytes()),
        ExportFormat::Lp => to_lp(model, opts).map(String::into_bytes),
    }
}

/// Terms are wrapped so that no line gets unreasonably long.
const TERMS_PER_LINE: usize = 6;

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

fn push_terms(out: &mut String, items: &[String]) {
    for (n, item) in items.iter().enumerate() {
        if n > 0 && n % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        out.push(' ');
        out.push_str(item);
    }
}

fn signed(coef: f64, body: &str, first: bool) -> String {
    let sign = if coef < 0.0 {
        "-"
    } else if first {
        ""
    } else {
        "+"
    };
    let mag = coef.abs();
    if mag == 1.0 {
        format!("{sign} {body}").trim_start().to_string()
    } else {
        format!("{sign} {} {body}", num(mag))
            .trim_start()
            .to_string()
    }
}

fn finite(name: &str, vals: impl IntoIterator<Item = f64>) -> Result<(), ExportError> {
    if vals.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(ExportError::UnrepresentableConstraint(
            name.into(),
            "non-finite coefficient".into(),
        ))
    }
}

/// CPLEX-style LP text.
///
/// The objective constant has no place in the format and is recorded in
/// the header. Non-convex quadratic rows are written as-is and counted in
/// the header so consumers can tell.
pub fn to_lp(model: &ModelIR, opts: ExportOptions) -> Result<String, ExportError> {
    let keep_var = |i: usize| opts.inline_sos || model.variables[i].encodes.is_none();
    let name = |i: usize| model.variables[i].name.as_str();
    let md = &model.metadata;
    let mut out = String::new();
    let _ = writeln!(out, "\\ model version {}", model.model_version);
    let _ = writeln!(
        out,
        "\\ kind {:?} K={} T={} S={} B={} epsilon={} lambda={}",
        md.kind, md.k, md.t, md.s, md.box_side, md.epsilon, md.lambda
    );
    let _ = writeln!(
        out,
        "\\ binaries topological={} lengthRelaxation={} sector={} block={} total={} budget={}",
        md.binaries.topological,
        md.binaries.length_relaxation,
        md.binaries.sector,
        md.binaries.block,
        md.binaries.total,
        md.binary_budget
    );
    for (tag, count) in &md.constraint_counts {
        let _ = writeln!(out, "\\ constraints {tag:?} {count}");
    }
    let nonconvex = model
        .quadratic_constraints
        .iter()
        .filter(|c| !c.convex)
        .count();
    let _ = writeln!(out, "\\ nonconvex quadratic rows {nonconvex}");
    let _ = writeln!(
        out,
        "\\ objective constant {}",
        num(model.objective.constant)
    );
    let _ = writeln!(
        out,
        "\\ sos {}",
        if opts.inline_sos { "inlined" } else { "native" }
    );

    finite(
        "objective",
        model
            .objective
            .lin
            .iter()
            .map(|t| t.1)
            .chain(model.objective.quad.iter().map(|t| t.2)),
    )?;
    out.push_str("Minimize\n obj:");
    let mut items: Vec<String> = model
        .objective
        .lin
        .iter()
        .enumerate()
        .map(|(n, &(i, a))| signed(a, name(i), n == 0))
        .collect();
    if !model.objective.quad.is_empty() {
        let q: Vec<String> = model
            .objective
            .quad
            .iter()
            .enumerate()
            .map(|(n, &(i, j, a))| quad_term(2.0 * a, name(i), name(j), n == 0))
            .collect();
        items.push(if items.is_empty() {
            "[".into()
        } else {
            "+ [".into()
        });
        items.extend(q);
        items.push("] / 2".into());
    }
    if items.is_empty() {
        items.push(format!("0 {}", name(0)));
    }
    push_terms(&mut out, &items);
    out.push_str("\nSubject To\n");
    for c in &model.linear_constraints {
        if c.encodes.is_some() && !opts.inline_sos {
            continue;
        }
        finite(&c.name, c.terms.iter().map(|t| t.1).chain([c.rhs]))?;
        let _ = write!(out, " {}:", c.name);
        let mut items: Vec<String> = c
            .terms
            .iter()
            .enumerate()
            .map(|(n, &(i, a))| signed(a, name(i), n == 0))
            .collect();
        if items.is_empty() {
            items.push(format!("0 {}", name(0)));
        }
        items.push(format!("{} {}", c.sense.symbol(), num(c.rhs)));
        push_terms(&mut out, &items);
        out.push('\n');
    }
    for c in &model.quadratic_constraints {
        finite(
            &c.name,
            c.lin
                .iter()
                .map(|t| t.1)
                .chain(c.quad.iter().map(|t| t.2))
                .chain([c.rhs]),
        )?;
        let _ = write!(out, " {}:", c.name);
        let mut items: Vec<String> = c
            .lin
            .iter()
            .enumerate()
            .map(|(n, &(i, a))| signed(a, name(i), n == 0))
            .collect();
        items.push(if items.is_empty() {
            "[".into()
        } else {
            "+ [".into()
        });
        items.extend(
            c.quad
                .iter()
                .enumerate()
                .map(|(n, &(i, j, a))| quad_term(a, name(i), name(j), n == 0)),
        );
        items.push("]".into());
        items.push(format!("{} {}", c.sense.symbol(), num(c.rhs)));
        push_terms(&mut out, &items);
        out.push('\n');
    }
    out.push_str("Bounds\n");
    for (i, v) in model.variables.iter().enumerate() {
        if !keep_var(i) {
            continue;
        }
        match v.kind {
            VarKind::Binary if v.lb == 0.0 && v.ub == 1.0 => {}
            _ if v.lb == v.ub => {
                let _ = writeln!(out, " {} = {}", v.name, num(v.lb));
            }
            _ if v.lb == f64::NEG_INFINITY && v.ub == f64::INFINITY => {
                let _ = writeln!(out, " {} free", v.name);
            }
            _ => {
                let _ = writeln!(out, " {} <= {} <= {}", num(v.lb), v.name, num(v.ub));
            }
        }
    }
    let bins: Vec<&str> = model
        .variables
        .iter()
        .enumerate()
        .filter(|&(i, v)| v.kind == VarKind::Binary && keep_var(i))
        .map(|(_, v)| v.name.as_str())
        .collect();
    if !bins.is_empty() {
        out.push_str("Binaries\n");
        for chunk in bins.chunks(TERMS_PER_LINE * 2) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    if !opts.inline_sos && !model.sos_sets.is_empty() {
        out.push_str("SOS\n");
        for s in &model.sos_sets {
            let kind = match s.kind {
                SosKind::Sos1 => "S1",
                SosKind::Sos2 => "S2",
            };
            let _ = write!(out, " {}: {kind}::", s.name);
            let items: Vec<String> = s
                .vars
                .iter()
                .enumerate()
                .map(|(n, &v)| format!("{}:{}", name(v), n + 1))
                .collect();
            push_terms(&mut out, &items);
            out.push('\n');
        }
    }
    out.push_str("End\n");
    Ok(out)
}

fn quad_term(a: f64, x: &str, y: &str, first: bool) -> String {
    if x == y {
        signed(a, &format!("{x} ^ 2"), first)
    } else {
        signed(a, &format!("{x} * {y}"), first)
    }
}

/// Rows that an LP consumer sees for the given options, by sense.
pub fn lp_row_count(model: &ModelIR, opts: ExportOptions) -> usize {
    model
        .linear_constraints
        .iter()
        .filter(|c| opts.inline_sos || c.encodes.is_none())
        .count()
        + model.quadratic_constraints.len()
}

impl std::fmt::Display for Sense {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.symbol())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_micp_relaxation, SynthesisConfig};

    #[test]
    fn sos_section_toggles() {
        let m = build_micp_relaxation(&SynthesisConfig::new(3, 4, 2, 2.0));
        let native = to_lp(&m, ExportOptions::default()).unwrap();
        let inline = to_lp(&m, ExportOptions { inline_sos: true }).unwrap();
        assert!(native.contains("\nSOS\n") && !inline.contains("\nSOS\n"));
        assert!(!native.contains("_bit0") && inline.contains("_bit0"));
        assert!(native.ends_with("End\n"));
    }
}
