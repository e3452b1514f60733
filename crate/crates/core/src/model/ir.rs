use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Constraint families, used to label every row of a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tag {
    NodeUsage,
    NodeConnectivity,
    NoWaste,
    MovableNode,
    Realizability,
    Area,
    Motor,
    PWLBound,
    Sector,
    InitBlock,
    Box,
}

impl Tag {
    pub const ALL: [Tag; 11] = [
        Tag::NodeUsage,
        Tag::NodeConnectivity,
        Tag::NoWaste,
        Tag::MovableNode,
        Tag::Realizability,
        Tag::Area,
        Tag::Motor,
        Tag::PWLBound,
        Tag::Sector,
        Tag::InitBlock,
        Tag::Box,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
    pub tag: Tag,
    /// Set when the variable only exists to encode an SOS set with binaries;
    /// holds the index of that set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encodes: Option<usize>,
}

impl Variable {
    /// Binary whose bounds leave it free to take either value.
    pub fn is_free_binary(&self) -> bool {
        self.kind == VarKind::Binary && self.lb < self.ub
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }

    /// Amount by which `lhs sense rhs` is violated (0 when satisfied).
    pub fn violation(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            Sense::Le => (lhs - rhs).max(0.0),
            Sense::Ge => (rhs - lhs).max(0.0),
            Sense::Eq => (lhs - rhs).abs(),
        }
    }
}

/// `Σ a_i x_i  sense  rhs`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LinearConstraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: Tag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encodes: Option<usize>,
}

/// `Σ q_ij x_i x_j + Σ a_i x_i  sense  rhs`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QuadraticConstraint {
    pub name: String,
    pub quad: Vec<(usize, usize, f64)>,
    pub lin: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: Tag,
    /// Whether the feasible set of this row is convex; checked numerically
    /// when the row is added.
    pub convex: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SosKind {
    #[serde(rename = "sos1")]
    Sos1,
    #[serde(rename = "sos2")]
    Sos2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SosSet {
    pub name: String,
    pub kind: SosKind,
    pub vars: Vec<usize>,
    pub tag: Tag,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Objective {
    pub quad: Vec<(usize, usize, f64)>,
    pub lin: Vec<(usize, f64)>,
    pub constant: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ModelKind {
    Fragment,
    Exact,
    Micp,
    Minlp,
}

/// Free binaries per origin.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BinaryCount {
    pub topological: usize,
    pub length_relaxation: usize,
    pub sector: usize,
    pub block: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Metadata {
    pub kind: ModelKind,
    pub k: usize,
    pub t: usize,
    pub s: usize,
    pub box_side: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub binaries: BinaryCount,
    /// Asymptotic budget `K⌈log K⌉ + 4TK⌈log S⌉ + TK⌈log 2S⌉` (MICP) or
    /// `K⌈log K⌉ + 4K⌈log S⌉` (MINLP) evaluated at this size.
    pub binary_budget: usize,
    pub constraint_counts: BTreeMap<Tag, usize>,
}

/// A mixed-integer quadratically constrained program.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelIR {
    pub model_version: u32,
    pub variables: Vec<Variable>,
    pub linear_constraints: Vec<LinearConstraint>,
    pub quadratic_constraints: Vec<QuadraticConstraint>,
    pub sos_sets: Vec<SosSet>,
    pub objective: Objective,
    pub metadata: Metadata,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IrError {
    #[error("unsupported model version {0}")]
    Version(u32),
    #[error("duplicate variable name {0}")]
    DuplicateVariable(String),
    #[error("{context} references variable #{index}, but only {count} exist")]
    DanglingReference {
        context: String,
        index: usize,
        count: usize,
    },
    #[error("binary variable {0} must have bounds within [0, 1]")]
    BinaryBounds(String),
    #[error("constraint {0} is marked convex but its quadratic form is not")]
    NotConvex(String),
    #[error("json: {0}")]
    Json(String),
}

impl ModelIR {
    pub fn new(metadata: Metadata) -> Self {
        ModelIR {
            model_version: MODEL_VERSION,
            variables: Vec::new(),
            linear_constraints: Vec::new(),
            quadratic_constraints: Vec::new(),
            sos_sets: Vec::new(),
            objective: Objective::default(),
            metadata,
            index: BTreeMap::new(),
        }
    }

    pub fn var_id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Id of a variable that must exist.
    pub fn id(&self, name: &str) -> usize {
        match self.index.get(name) {
            Some(&i) => i,
            None => panic!("model has no variable named {name}"),
        }
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lb: f64,
        ub: f64,
        tag: Tag,
    ) -> usize {
        let name = name.into();
        assert!(!self.index.contains_key(&name), "duplicate variable {name}");
        let id = self.variables.len();
        self.index.insert(name.clone(), id);
        self.variables.push(Variable {
            name,
            kind,
            lb,
            ub,
            tag,
            encodes: None,
        });
        id
    }

    pub fn continuous(&mut self, name: impl Into<String>, lb: f64, ub: f64, tag: Tag) -> usize {
        self.add_var(name, VarKind::Continuous, lb, ub, tag)
    }

    pub fn binary(&mut self, name: impl Into<String>, tag: Tag) -> usize {
        self.add_var(name, VarKind::Binary, 0.0, 1.0, tag)
    }

    pub fn linear(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
        tag: Tag,
    ) -> usize {
        self.linear_constraints.push(LinearConstraint {
            name: name.into(),
            terms: merge_terms(terms),
            sense,
            rhs,
            tag,
            encodes: None,
        });
        self.linear_constraints.len() - 1
    }

    /// Add a quadratic row; its convexity flag is computed from the form.
    pub fn quadratic(
        &mut self,
        name: impl Into<String>,
        quad: Vec<(usize, usize, f64)>,
        lin: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
        tag: Tag,
    ) -> usize {
        let quad = merge_quad(quad);
        let convex = match sense {
            Sense::Le => is_psd(&quad, 1.0),
            Sense::Ge => is_psd(&quad, -1.0),
            Sense::Eq => quad.is_empty(),
        };
        self.quadratic_constraints.push(QuadraticConstraint {
            name: name.into(),
            quad,
            lin: merge_terms(lin),
            sense,
            rhs,
            tag,
            convex,
        });
        self.quadratic_constraints.len() - 1
    }

    pub fn sos(
        &mut self,
        name: impl Into<String>,
        kind: SosKind,
        vars: Vec<usize>,
        tag: Tag,
    ) -> usize {
        self.sos_sets.push(SosSet {
            name: name.into(),
            kind,
            vars,
            tag,
        });
        self.sos_sets.len() - 1
    }

    /// Mark variables and linear rows added since the given counts as the
    /// binary encoding of SOS set `set`.
    pub(crate) fn mark_encoding(&mut self, set: usize, vars_from: usize, rows_from: usize) {
        for v in &mut self.variables[vars_from..] {
            v.encodes.get_or_insert(set);
        }
        for c in &mut self.linear_constraints[rows_from..] {
            c.encodes.get_or_insert(set);
        }
    }

    pub fn free_binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.is_free_binary()).count()
    }

    /// Refresh constraint counts in the metadata.
    pub fn recount(&mut self) {
        let mut counts: BTreeMap<Tag, usize> = Tag::ALL.iter().map(|&t| (t, 0)).collect();
        for c in &self.linear_constraints {
            *counts.entry(c.tag).or_default() += 1;
        }
        for c in &self.quadratic_constraints {
            *counts.entry(c.tag).or_default() += 1;
        }
        counts.retain(|_, v| *v > 0);
        self.metadata.constraint_counts = counts;
        self.metadata.binaries.total = self.free_binaries();
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, IrError> {
        let mut m: ModelIR =
            serde_json::from_str(text).map_err(|e| IrError::Json(e.to_string()))?;
        m.rebuild_index()?;
        m.check_references()?;
        Ok(m)
    }

    fn rebuild_index(&mut self) -> Result<(), IrError> {
        if self.model_version != MODEL_VERSION {
            return Err(IrError::Version(self.model_version));
        }
        self.index.clear();
        for (i, v) in self.variables.iter().enumerate() {
            if self.index.insert(v.name.clone(), i).is_some() {
                return Err(IrError::DuplicateVariable(v.name.clone()));
            }
        }
        Ok(())
    }

    /// Structural well-formedness: references resolve, binaries are 0/1,
    /// convex flags are truthful.
    pub fn check_references(&self) -> Result<(), IrError> {
        let n = self.variables.len();
        let check = |ctx: &str, i: usize| {
            if i < n {
                Ok(())
            } else {
                Err(IrError::DanglingReference {
                    context: ctx.to_string(),
                    index: i,
                    count: n,
                })
            }
        };
        for v in &self.variables {
            if v.kind == VarKind::Binary && (v.lb < 0.0 || v.ub > 1.0) {
                return Err(IrError::BinaryBounds(v.name.clone()));
            }
        }
        for c in &self.linear_constraints {
            c.terms.iter().try_for_each(|&(i, _)| check(&c.name, i))?;
        }
        for c in &self.quadratic_constraints {
            c.lin.iter().try_for_each(|&(i, _)| check(&c.name, i))?;
            c.quad
                .iter()
                .try_for_each(|&(i, j, _)| check(&c.name, i).and(check(&c.name, j)))?;
            if c.convex {
                let ok = match c.sense {
                    Sense::Le => is_psd(&c.quad, 1.0),
                    Sense::Ge => is_psd(&c.quad, -1.0),
                    Sense::Eq => c.quad.is_empty(),
                };
                if !ok {
                    return Err(IrError::NotConvex(c.name.clone()));
                }
            }
        }
        for s in &self.sos_sets {
            s.vars.iter().try_for_each(|&i| check(&s.name, i))?;
        }
        self.objective
            .lin
            .iter()
            .try_for_each(|&(i, _)| check("objective", i))?;
        self.objective
            .quad
            .iter()
            .try_for_each(|&(i, j, _)| check("objective", i).and(check("objective", j)))?;
        Ok(())
    }

    /// Append all variables, rows and sets of `other`, remapping ids.
    /// Variables with the same name are shared.
    pub fn absorb(&mut self, other: &ModelIR) {
        let map: Vec<usize> = other
            .variables
            .iter()
            .map(|v| match self.var_id(&v.name) {
                Some(id) => id,
                None => {
                    let id = self.add_var(v.name.clone(), v.kind, v.lb, v.ub, v.tag);
                    self.variables[id].encodes = v.encodes.map(|s| s + self.sos_sets.len());
                    id
                }
            })
            .collect();
        let set_offset = self.sos_sets.len();
        for c in &other.linear_constraints {
            let mut c = c.clone();
            c.terms.iter_mut().for_each(|t| t.0 = map[t.0]);
            c.encodes = c.encodes.map(|s| s + set_offset);
            self.linear_constraints.push(c);
        }
        for c in &other.quadratic_constraints {
            let mut c = c.clone();
            c.lin.iter_mut().for_each(|t| t.0 = map[t.0]);
            c.quad.iter_mut().for_each(|t| {
                t.0 = map[t.0];
                t.1 = map[t.1];
            });
            self.quadratic_constraints.push(c);
        }
        for s in &other.sos_sets {
            let mut s = s.clone();
            s.vars.iter_mut().for_each(|v| *v = map[*v]);
            self.sos_sets.push(s);
        }
        let mut obj = other.objective.clone();
        obj.lin.iter_mut().for_each(|t| t.0 = map[t.0]);
        obj.quad.iter_mut().for_each(|t| {
            t.0 = map[t.0];
            t.1 = map[t.1];
        });
        self.objective.lin.extend(obj.lin);
        self.objective.quad.extend(obj.quad);
        self.objective.constant += obj.constant;
        self.objective.lin = merge_terms(std::mem::take(&mut self.objective.lin));
        self.objective.quad = merge_quad(std::mem::take(&mut self.objective.quad));
    }
}

/// Combine duplicate ids and drop zero coefficients, keeping first-seen order.
pub(crate) fn merge_terms(terms: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for (i, a) in terms {
        match out.iter_mut().find(|t| t.0 == i) {
            Some(t) => t.1 += a,
            None => out.push((i, a)),
        }
    }
    out.retain(|t| t.1 != 0.0);
    out
}

pub(crate) fn merge_quad(terms: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(terms.len());
    for (i, j, a) in terms {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        match out.iter_mut().find(|t| t.0 == i && t.1 == j) {
            Some(t) => t.2 += a,
            None => out.push((i, j, a)),
        }
    }
    out.retain(|t| t.2 != 0.0);
    out
}

/// Whether `sign · xᵀQx` is positive semidefinite, with eigenvalue
/// tolerance `-1e-10`.
pub fn is_psd(quad: &[(usize, usize, f64)], sign: f64) -> bool {
    let mut ids: Vec<usize> = quad.iter().flat_map(|t| [t.0, t.1]).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.is_empty() {
        return true;
    }
    let pos = |v: usize| ids.binary_search(&v).unwrap();
    let n = ids.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for &(i, j, a) in quad {
        let (p, q) = (pos(i), pos(j));
        if p == q {
            m[(p, p)] += sign * a;
        } else {
            m[(p, q)] += sign * a / 2.0;
            m[(q, p)] += sign * a / 2.0;
        }
    }
    SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .all(|&e| e >= -1e-10)
}

/// Evaluate `Σ q_ij x_i x_j + Σ a_i x_i`.
pub fn eval_quadratic(quad: &[(usize, usize, f64)], lin: &[(usize, f64)], x: &[f64]) -> f64 {
    quad.iter().map(|&(i, j, a)| a * x[i] * x[j]).sum::<f64>()
        + lin.iter().map(|&(i, a)| a * x[i]).sum::<f64>()
}
