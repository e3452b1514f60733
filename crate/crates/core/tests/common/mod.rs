#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use linkforge::geometry::Vec2;
use linkforge::kinematics::{Linkage, MotorSpec, NodeDef, Orientation, Spin};
use linkforge::model::{
    build_topological, encode_sos1, encode_sos2, names, ModelIR, Sense, SosKind, SynthesisConfig,
    Tag, VarKind,
};
use linkforge::topology::StructureKey;
use minilp::{ComparisonOp, OptimizationDirection, Problem};

/// Motor on the unit circle, ground pivot at (3, 0), coupler point with
/// two 2.5 links.
pub fn four_bar() -> Linkage {
    Linkage::new(
        vec![
            NodeDef::motor(MotorSpec::rotary(Vec2::ZERO, 1.0, Spin::Clockwise)),
            NodeDef::fixed(2, Vec2::new(3.0, 0.0)),
            NodeDef::movable(3, [1, 2], [2.5, 2.5], Orientation::Positive),
        ],
        10.0,
    )
    .unwrap()
}

/// Whether the linear rows of `model` admit a point with the given
/// variables fixed; returns that point. Quadratic rows are not allowed.
pub fn lp_point(model: &ModelIR, fixed: &BTreeMap<usize, f64>) -> Option<Vec<f64>> {
    assert!(
        model.quadratic_constraints.is_empty(),
        "lp oracle takes linear models only"
    );
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = model
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| match fixed.get(&i) {
            Some(&val) => p.add_var(0.0, (val, val)),
            None => p.add_var(0.0, (v.lb, v.ub)),
        })
        .collect();
    for c in &model.linear_constraints {
        let expr: Vec<_> = c.terms.iter().map(|&(i, a)| (vars[i], a)).collect();
        let op = match c.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Eq => ComparisonOp::Eq,
            Sense::Ge => ComparisonOp::Ge,
        };
        p.add_constraint(expr, op, c.rhs);
    }
    let sol = p.solve().ok()?;
    Some(vars.iter().map(|&v| *sol.var_value(v)).collect())
}

/// Every 0/1 vector of length `n`.
pub fn bit_patterns(n: usize) -> impl Iterator<Item = Vec<f64>> {
    (0u64..1 << n).map(move |m| (0..n).map(|b| ((m >> b) & 1) as f64).collect())
}

/// Empty model with valid metadata, for encoding tests.
pub fn blank() -> ModelIR {
    let cfg = SynthesisConfig::new(2, 3, 1, 1.0);
    ModelIR::new(build_topological(&cfg).metadata)
}

/// Whether some binary setting of the SOS encoding over `m` members admits
/// the weights with the given support.
pub fn sos_support_feasible(kind: SosKind, m: usize, support: u32) -> bool {
    let mut ir = blank();
    let xs: Vec<usize> = (0..m)
        .map(|j| ir.continuous(format!("x{j}"), 0.0, 1.0, Tag::Box))
        .collect();
    match kind {
        SosKind::Sos1 => encode_sos1(&mut ir, "s", &xs, Tag::Box),
        SosKind::Sos2 => encode_sos2(&mut ir, "s", &xs, Tag::Box),
    };
    let count = support.count_ones().max(1) as f64;
    let mut fixed = BTreeMap::new();
    for (j, &x) in xs.iter().enumerate() {
        fixed.insert(
            x,
            if support & (1 << j) != 0 {
                1.0 / count
            } else {
                0.0
            },
        );
    }
    let bits: Vec<usize> = (0..ir.variables.len())
        .filter(|&i| ir.variables[i].kind == VarKind::Binary)
        .collect();
    bit_patterns(bits.len()).any(|pattern| {
        let mut f = fixed.clone();
        for (&b, &v) in bits.iter().zip(&pattern) {
            f.insert(b, v);
        }
        lp_point(&ir, &f).is_some()
    })
}

/// Structures admitted by the topological rows, by enumerating every free
/// binary and asking an LP for the continuous remainder.
pub fn fragment_structures(k: usize) -> BTreeSet<StructureKey> {
    let cfg = SynthesisConfig::new(k, 3, 1, 1.0);
    let m = build_topological(&cfg);
    let bins: Vec<usize> = (0..m.variables.len())
        .filter(|&i| m.variables[i].is_free_binary())
        .collect();
    let mut fixed_bounds = BTreeMap::new();
    for (i, v) in m.variables.iter().enumerate() {
        if v.kind == VarKind::Binary && !v.is_free_binary() {
            fixed_bounds.insert(i, v.lb);
        }
    }
    let mut out = BTreeSet::new();
    for pattern in bit_patterns(bins.len()) {
        let mut f = fixed_bounds.clone();
        f.extend(bins.iter().copied().zip(pattern));
        let Some(x) = lp_point(&m, &f) else { continue };
        let bit = |name: String| {
            let v = x[m.id(&name)];
            assert!((v - v.round()).abs() < 1e-7, "{name} = {v} is fractional");
            v > 0.5
        };
        out.insert(StructureKey {
            u: (1..=k).map(|i| bit(names::u(i))).collect(),
            f: (1..=k).map(|i| bit(names::f(i))).collect(),
            c1: (1..=k)
                .map(|i| {
                    (0..i)
                        .map(|j| i > 1 && bit(names::c(1, j, i)) || i == 1 && j == 0)
                        .collect()
                })
                .collect(),
            c2: (1..=k)
                .map(|i| {
                    (0..i)
                        .map(|j| i > 1 && bit(names::c(2, j, i)) || i == 1 && j == 0)
                        .collect()
                })
                .collect(),
        });
    }
    out
}
