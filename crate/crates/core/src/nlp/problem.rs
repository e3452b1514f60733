use std::collections::{BTreeMap, HashMap};

use crate::model::{topology_values, ModelIR, Sense, Tag};
use crate::topology::TopologyAssignment;

/// Value of a row is `Σ q·y_i·y_j + Σ a·y_i + constant`.
#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct Poly {
    pub quad: Vec<(usize, usize, f64)>,
    pub lin: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Poly {
    pub fn value(&self, y: &[f64]) -> f64 {
        let mut v = self.constant;
        for &(i, a) in &self.lin {
            v += a * y[i];
        }
        for &(i, j, q) in &self.quad {
            v += q * y[i] * y[j];
        }
        v
    }

    /// `grad += w·∇value`
    pub fn add_grad(&self, y: &[f64], w: f64, grad: &mut [f64]) {
        for &(i, a) in &self.lin {
            grad[i] += w * a;
        }
        for &(i, j, q) in &self.quad {
            if i == j {
                grad[i] += 2.0 * w * q * y[i];
            } else {
                grad[i] += w * q * y[j];
                grad[j] += w * q * y[i];
            }
        }
    }

    fn scale(&mut self, s: f64) {
        self.lin.iter_mut().for_each(|t| t.1 *= s);
        self.quad.iter_mut().for_each(|t| t.2 *= s);
        self.constant *= s;
    }

    fn max_coef(&self) -> f64 {
        self.lin
            .iter()
            .map(|t| t.1.abs())
            .chain(self.quad.iter().map(|t| t.2.abs()))
            .fold(0.0, f64::max)
    }

    fn is_constant(&self) -> bool {
        self.lin.is_empty() && self.quad.is_empty()
    }

    /// Range of the value over the box `lo..hi`.
    fn range(&self, lo: &[f64], hi: &[f64]) -> (f64, f64) {
        let (mut a, mut b) = (self.constant, self.constant);
        let mut add = |x: f64, y: f64| {
            a += x.min(y);
            b += x.max(y);
        };
        for &(i, c) in &self.lin {
            add(c * lo[i], c * hi[i]);
        }
        for &(i, j, q) in &self.quad {
            let (p, r) = if i == j {
                let cands = [lo[i] * lo[i], hi[i] * hi[i]];
                let low = if lo[i] <= 0.0 && hi[i] >= 0.0 {
                    0.0
                } else {
                    cands[0].min(cands[1])
                };
                (low, cands[0].max(cands[1]))
            } else {
                let c = [lo[i] * lo[j], lo[i] * hi[j], hi[i] * lo[j], hi[i] * hi[j]];
                (
                    c.iter().copied().fold(f64::INFINITY, f64::min),
                    c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                )
            };
            add(q * p, q * r);
        }
        (a, b)
    }

    fn negated(&self) -> Poly {
        let mut p = self.clone();
        p.lin.iter_mut().for_each(|t| t.1 = -t.1);
        p.quad.iter_mut().for_each(|t| t.2 = -t.2);
        p.constant = -p.constant;
        p
    }

    /// Exact bit pattern of the non-constant part up to a sign, and that
    /// sign.
    fn shape_key(&self) -> (Vec<u64>, f64) {
        let first = self
            .lin
            .first()
            .map(|t| t.1)
            .or(self.quad.first().map(|t| t.2))
            .unwrap_or(1.0);
        let s = if first < 0.0 { -1.0 } else { 1.0 };
        let mut key = Vec::with_capacity(2 * self.lin.len() + 3 * self.quad.len() + 1);
        for &(i, a) in &self.lin {
            key.extend([i as u64, (s * a).to_bits()]);
        }
        key.push(u64::MAX);
        for &(i, j, q) in &self.quad {
            key.extend([i as u64, j as u64, (s * q).to_bits()]);
        }
        (key, s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum RowKind {
    Eq,
    /// value ≥ 0
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Row {
    pub poly: Poly,
    pub kind: RowKind,
    /// Index of the originating model row; quadratic rows follow linear ones.
    pub source: usize,
    pub area: bool,
}

/// Values and bounds pinned on top of a model's own bounds.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Fixings {
    pub values: BTreeMap<usize, f64>,
    pub bounds: BTreeMap<usize, (f64, f64)>,
}

impl Fixings {
    /// Every finite entry of `x` becomes a fixed value.
    pub fn from_values(x: &[f64]) -> Self {
        let values = x
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, &v)| (i, v))
            .collect();
        Fixings {
            values,
            bounds: BTreeMap::new(),
        }
    }

    /// Pins every structural variable of `model`, selector encoding bits
    /// included, to the values of `topo`.
    pub fn topology(model: &ModelIR, topo: &TopologyAssignment) -> Self {
        let mut x = vec![f64::NAN; model.variables.len()];
        topology_values(model, topo, &mut x);
        Fixings::from_values(&x)
    }

    pub fn fix(&mut self, var: usize, value: f64) {
        self.values.insert(var, value);
    }

    /// Intersect the bounds of `var` with `lo..=hi`.
    pub fn restrict(&mut self, var: usize, lo: f64, hi: f64) {
        let e = self
            .bounds
            .entry(var)
            .or_insert((f64::NEG_INFINITY, f64::INFINITY));
        e.0 = e.0.max(lo);
        e.1 = e.1.min(hi);
    }
}

/// Affine expression `Σ a·z_k + constant`.
#[derive(Clone, Debug, Default, PartialEq)]
struct Affine {
    terms: BTreeMap<usize, f64>,
    constant: f64,
}

impl Affine {
    fn var(k: usize) -> Self {
        Affine {
            terms: BTreeMap::from([(k, 1.0)]),
            constant: 0.0,
        }
    }

    fn value(&self, z: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(&k, &a)| a * z[k]).sum::<f64>()
    }

    /// Replace variable `v` by `e`.
    fn substitute(&mut self, v: usize, e: &Affine) {
        if let Some(a) = self.terms.remove(&v) {
            self.constant += a * e.constant;
            for (&k, &b) in &e.terms {
                let t = self.terms.entry(k).or_default();
                *t += a * b;
                if *t == 0.0 {
                    self.terms.remove(&k);
                }
            }
        }
    }
}

/// Rewrite `poly` with every variable `i` replaced by `exprs[i]`.
fn compose(poly: &Poly, exprs: &[Affine]) -> Poly {
    let mut c = poly.constant;
    let mut l: BTreeMap<usize, f64> = BTreeMap::new();
    let mut q: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(i, a) in &poly.lin {
        let e = &exprs[i];
        c += a * e.constant;
        for (&k, &b) in &e.terms {
            *l.entry(k).or_default() += a * b;
        }
    }
    for &(i, j, a) in &poly.quad {
        let (ei, ej) = (&exprs[i], &exprs[j]);
        c += a * ei.constant * ej.constant;
        for (&k, &b) in &ej.terms {
            *l.entry(k).or_default() += a * ei.constant * b;
        }
        for (&k, &b) in &ei.terms {
            *l.entry(k).or_default() += a * ej.constant * b;
        }
        for (&k1, &b1) in &ei.terms {
            for (&k2, &b2) in &ej.terms {
                *q.entry((k1.min(k2), k1.max(k2))).or_default() += a * b1 * b2;
            }
        }
    }
    let tiny = 1e-14
        * l.values()
            .chain(q.values())
            .fold(0.0f64, |m, v| m.max(v.abs()));
    Poly {
        quad: q
            .into_iter()
            .filter(|e| e.1.abs() > tiny)
            .map(|((i, j), v)| (i, j, v))
            .collect(),
        lin: l.into_iter().filter(|e| e.1.abs() > tiny).collect(),
        constant: c,
    }
}

/// Outcome of scaling a row to unit coefficients.
enum Prepared {
    Constant(f64),
    Redundant,
    Row(Poly),
}

fn prepare(mut poly: Poly, kind: RowKind, lo: &[f64], hi: &[f64]) -> Prepared {
    if poly.is_constant() {
        return Prepared::Constant(match kind {
            RowKind::Eq => poly.constant.abs(),
            RowKind::Ge => (-poly.constant).max(0.0),
        });
    }
    let scale = poly.max_coef();
    poly.scale(1.0 / scale);
    if kind == RowKind::Ge && poly.range(lo, hi).0 >= 0.0 {
        return Prepared::Redundant;
    }
    Prepared::Row(poly)
}

/// Continuous problem obtained from a model by substituting fixed
/// variables and relaxing the remaining binaries to their bounds.
///
/// Unfixed variables are mapped affinely onto `[0, 1]` (or left unscaled
/// when unbounded) and every row is divided by its largest coefficient, so
/// all tolerances apply to dimensionless quantities. Rows that hold
/// everywhere on the box are dropped and pairs of opposite inequalities
/// become equalities. Linear equalities are then eliminated by
/// substitution, which for a decided topology removes the link, offset and
/// motor rows and leaves the link lengths as the only equalities. Bounds of
/// eliminated variables turn into linear rows. Special ordered sets are
/// ignored.
#[derive(Clone, Debug)]
pub struct NlpProblem {
    /// Per model variable: its fixed value or its scaled index.
    fixed: Vec<Option<f64>>,
    scaled_of: Vec<Option<usize>>,
    /// Per scaled variable: model index, offset, width and its expression
    /// in the free variables.
    scaled_model: Vec<usize>,
    offset: Vec<f64>,
    width: Vec<f64>,
    exprs: Vec<Affine>,
    /// Per free variable: the scaled variable it stands for.
    free: Vec<usize>,
    pub(crate) lower: Vec<f64>,
    pub(crate) upper: Vec<f64>,
    pub(crate) rows: Vec<Row>,
    pub(crate) objective: Poly,
    /// Factor that brings the objective to unit coefficient size.
    pub(crate) objective_weight: f64,
    /// Worst scaled violation among rows with no free variable left.
    fixed_violation: f64,
    row_names: Vec<String>,
    box_side: f64,
}

impl NlpProblem {
    pub fn new(model: &ModelIR, fixings: &Fixings) -> Self {
        let n = model.variables.len();
        let (mut fixed, mut scaled_of) = (vec![None; n], vec![None; n]);
        let mut scaled_model = Vec::new();
        let (mut offset, mut width, mut ylo, mut yhi) =
            (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (i, v) in model.variables.iter().enumerate() {
            let (mut lb, mut ub) = (v.lb, v.ub);
            if let Some(&(l, u)) = fixings.bounds.get(&i) {
                lb = lb.max(l);
                ub = ub.min(u);
            }
            if let Some(&val) = fixings.values.get(&i) {
                fixed[i] = Some(val);
            } else if lb >= ub {
                fixed[i] = Some(lb);
            } else {
                scaled_of[i] = Some(scaled_model.len());
                scaled_model.push(i);
                if lb.is_finite() && ub.is_finite() {
                    offset.push(lb);
                    width.push(ub - lb);
                    ylo.push(0.0);
                    yhi.push(1.0);
                } else {
                    offset.push(0.0);
                    width.push(1.0);
                    ylo.push(lb);
                    yhi.push(ub);
                }
            }
        }
        let ny = scaled_model.len();
        let mut p = NlpProblem {
            fixed,
            scaled_of,
            scaled_model,
            offset,
            width,
            exprs: (0..ny).map(Affine::var).collect(),
            free: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            rows: Vec::new(),
            objective: Poly::default(),
            objective_weight: 1.0,
            fixed_violation: 0.0,
            row_names: Vec::new(),
            box_side: model.metadata.box_side,
        };

        let nlin = model.linear_constraints.len();
        let mut pending = Vec::new();
        for (r, c) in model.linear_constraints.iter().enumerate() {
            let poly = p.substitute(&[], &c.terms, -c.rhs);
            p.row_names.push(c.name.clone());
            pending.push((
                poly,
                c.sense,
                r,
                false,
                c.terms
                    .iter()
                    .map(|t| t.1.abs())
                    .sum::<f64>()
                    .max(c.rhs.abs()),
            ));
        }
        for (r, c) in model.quadratic_constraints.iter().enumerate() {
            let poly = p.substitute(&c.quad, &c.lin, -c.rhs);
            p.row_names.push(c.name.clone());
            let mag = c
                .lin
                .iter()
                .map(|t| t.1.abs())
                .chain(c.quad.iter().map(|t| t.2.abs()))
                .sum::<f64>();
            pending.push((
                poly,
                c.sense,
                nlin + r,
                c.tag == Tag::Area,
                mag.max(c.rhs.abs()),
            ));
        }

        // rows over the scaled variables
        let mut rows: Vec<Row> = Vec::new();
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        for (poly, sense, source, area, mag) in pending {
            if poly.is_constant() {
                let raw = sense.violation(poly.constant, 0.0);
                p.fixed_violation = p.fixed_violation.max(raw / mag.max(1.0));
                continue;
            }
            let poly = if sense == Sense::Le {
                poly.negated()
            } else {
                poly
            };
            let kind = if sense == Sense::Eq {
                RowKind::Eq
            } else {
                RowKind::Ge
            };
            let Prepared::Row(poly) = prepare(poly, kind, &ylo, &yhi) else {
                continue;
            };
            if kind == RowKind::Ge && !area {
                let (key, s) = poly.shape_key();
                if let Some(&other) = seen.get(&key) {
                    let o: &Row = &rows[other];
                    let (_, os) = o.poly.shape_key();
                    if o.kind == RowKind::Ge
                        && os == -s
                        && (o.poly.constant + poly.constant).abs() <= 1e-12
                    {
                        rows[other].kind = RowKind::Eq;
                        continue;
                    }
                } else {
                    seen.insert(key, rows.len());
                }
            }
            rows.push(Row {
                poly,
                kind,
                source,
                area,
            });
        }

        // eliminate linear equalities one at a time, pivoting on the largest
        // coefficient and preferring earlier variables among equals; node
        // positions come before link vectors, so positions go and the
        // length rows end up in the link vectors alone
        let mut eliminated = vec![false; ny];
        let mut consumed = vec![false; rows.len()];
        for (r, row) in rows.iter().enumerate() {
            if row.kind != RowKind::Eq || !row.poly.quad.is_empty() {
                continue;
            }
            consumed[r] = true;
            let mut e = Affine {
                terms: BTreeMap::new(),
                constant: row.poly.constant,
            };
            for &(i, a) in &row.poly.lin {
                e.constant += a * p.exprs[i].constant;
                for (&k, &b) in &p.exprs[i].terms {
                    *e.terms.entry(k).or_default() += a * b;
                }
            }
            let scale = row.poly.max_coef();
            e.terms.retain(|_, v| v.abs() > 1e-12 * scale);
            let Some((&v, &av)) = e
                .terms
                .iter()
                .rev()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            else {
                p.fixed_violation = p.fixed_violation.max(e.constant.abs() / scale);
                continue;
            };
            e.terms.remove(&v);
            let sol = Affine {
                terms: e.terms.iter().map(|(&k, &b)| (k, -b / av)).collect(),
                constant: -e.constant / av,
            };
            for ex in p.exprs.iter_mut() {
                ex.substitute(v, &sol);
            }
            eliminated[v] = true;
        }
        p.free = (0..ny).filter(|&k| !eliminated[k]).collect();
        let mut renumber = vec![usize::MAX; ny];
        for (z, &k) in p.free.iter().enumerate() {
            renumber[k] = z;
        }
        for ex in p.exprs.iter_mut() {
            ex.terms = ex.terms.iter().map(|(&k, &a)| (renumber[k], a)).collect();
        }
        p.lower = p.free.iter().map(|&k| ylo[k]).collect();
        p.upper = p.free.iter().map(|&k| yhi[k]).collect();

        for (row, _) in rows.into_iter().zip(&consumed).filter(|(_, &c)| !c) {
            match prepare(compose(&row.poly, &p.exprs), row.kind, &p.lower, &p.upper) {
                Prepared::Constant(v) => p.fixed_violation = p.fixed_violation.max(v),
                Prepared::Redundant => {}
                Prepared::Row(poly) => p.rows.push(Row { poly, ..row }),
            }
        }
        for k in (0..ny).filter(|&k| eliminated[k]) {
            let e = &p.exprs[k];
            let mut source = None;
            for (sign, bound) in [(1.0, ylo[k]), (-1.0, yhi[k])] {
                if !bound.is_finite() {
                    continue;
                }
                let poly = Poly {
                    quad: Vec::new(),
                    lin: e.terms.iter().map(|(&z, &a)| (z, sign * a)).collect(),
                    constant: sign * (e.constant - bound),
                };
                match prepare(poly, RowKind::Ge, &p.lower, &p.upper) {
                    Prepared::Constant(v) => p.fixed_violation = p.fixed_violation.max(v),
                    Prepared::Redundant => {}
                    Prepared::Row(poly) => {
                        let source = *source.get_or_insert_with(|| {
                            p.row_names
                                .push(format!("bound_{}", model.variables[p.scaled_model[k]].name));
                            p.row_names.len() - 1
                        });
                        p.rows.push(Row {
                            poly,
                            kind: RowKind::Ge,
                            source,
                            area: false,
                        });
                    }
                }
            }
        }

        let obj = &model.objective;
        p.objective = compose(&p.substitute(&obj.quad, &obj.lin, obj.constant), &p.exprs);
        let m = p.objective.max_coef();
        p.objective_weight = if m > 0.0 { 1.0 / m } else { 1.0 };
        p
    }

    /// Express `Σ quad + Σ lin + constant` in the scaled variables.
    fn substitute(
        &self,
        quad: &[(usize, usize, f64)],
        lin: &[(usize, f64)],
        constant: f64,
    ) -> Poly {
        let mut c = constant;
        let mut l: BTreeMap<usize, f64> = BTreeMap::new();
        let mut q: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        // variable x_i = o + w·y (w = 0 and o = value for fixed ones)
        let affine = |i: usize| match (self.fixed[i], self.scaled_of[i]) {
            (Some(v), _) => (None, v, 0.0),
            (None, Some(k)) => (Some(k), self.offset[k], self.width[k]),
            (None, None) => unreachable!("every variable is fixed or scaled"),
        };
        for &(i, a) in lin {
            let (yi, o, w) = affine(i);
            c += a * o;
            if let Some(k) = yi {
                *l.entry(k).or_default() += a * w;
            }
        }
        for &(i, j, a) in quad {
            let (yi, oi, wi) = affine(i);
            let (yj, oj, wj) = affine(j);
            c += a * oi * oj;
            if let Some(k) = yj {
                *l.entry(k).or_default() += a * oi * wj;
            }
            if let Some(k) = yi {
                *l.entry(k).or_default() += a * wi * oj;
            }
            if let (Some(a1), Some(b1)) = (yi, yj) {
                *q.entry((a1.min(b1), a1.max(b1))).or_default() += a * wi * wj;
            }
        }
        Poly {
            quad: q
                .into_iter()
                .filter(|e| e.1 != 0.0)
                .map(|((i, j), v)| (i, j, v))
                .collect(),
            lin: l.into_iter().filter(|e| e.1 != 0.0).collect(),
            constant: c,
        }
    }

    /// Number of free variables.
    pub fn dim(&self) -> usize {
        self.free.len()
    }

    /// Number of variables of the underlying model.
    pub fn model_len(&self) -> usize {
        self.fixed.len()
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn equality_count(&self) -> usize {
        self.rows.iter().filter(|r| r.kind == RowKind::Eq).count()
    }

    pub fn box_side(&self) -> f64 {
        self.box_side
    }

    /// Model index of free variable `k`.
    pub fn model_index(&self, k: usize) -> usize {
        self.scaled_model[self.free[k]]
    }

    /// Worst violation among rows whose variables are all fixed.
    pub fn fixed_violation(&self) -> f64 {
        self.fixed_violation
    }

    /// Name of the model row behind internal row `r`.
    pub fn row_name(&self, r: usize) -> &str {
        &self.row_names[self.rows[r].source]
    }

    /// Free-variable point for a full model vector, clamped into the box.
    /// Missing or non-finite entries go to the middle of their range.
    pub fn to_scaled(&self, x: &[f64]) -> Vec<f64> {
        self.free
            .iter()
            .enumerate()
            .map(|(z, &k)| {
                let s = match x
                    .get(self.scaled_model[k])
                    .copied()
                    .filter(|v| v.is_finite())
                {
                    Some(v) => (v - self.offset[k]) / self.width[k],
                    None if self.lower[z].is_finite() && self.upper[z].is_finite() => {
                        0.5 * (self.lower[z] + self.upper[z])
                    }
                    None => 0.0,
                };
                s.clamp(self.lower[z], self.upper[z])
            })
            .collect()
    }

    /// Full model vector for a free-variable point.
    pub fn to_full(&self, z: &[f64]) -> Vec<f64> {
        (0..self.fixed.len())
            .map(|i| match (self.fixed[i], self.scaled_of[i]) {
                (Some(v), _) => v,
                (None, Some(k)) => self.offset[k] + self.width[k] * self.exprs[k].value(z),
                (None, None) => unreachable!("every variable is fixed or scaled"),
            })
            .collect()
    }

    /// Violation of a full model vector: the largest scaled row violation
    /// at its projection, or the distance of an eliminated variable from
    /// the value the projection implies, whichever is larger.
    pub fn start_violation(&self, x: &[f64]) -> f64 {
        let z = self.to_scaled(x);
        let mut v = self.max_violation(&z);
        let mut is_free = vec![false; self.exprs.len()];
        self.free.iter().for_each(|&k| is_free[k] = true);
        for (k, e) in self.exprs.iter().enumerate().filter(|(k, _)| !is_free[*k]) {
            let given = (x[self.scaled_model[k]] - self.offset[k]) / self.width[k];
            let gap = (given - e.value(&z)).abs();
            v = v.max(if gap.is_nan() { f64::INFINITY } else { gap });
        }
        v
    }

    /// Scaled row values.
    pub fn row_values(&self, y: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.poly.value(y)).collect()
    }

    /// Sparse gradient of each scaled row.
    pub fn row_jacobian(&self, y: &[f64]) -> Vec<Vec<(usize, f64)>> {
        let mut g = vec![0.0; self.dim()];
        self.rows
            .iter()
            .map(|r| {
                r.poly.add_grad(y, 1.0, &mut g);
                let mut idx: Vec<usize> = r
                    .poly
                    .lin
                    .iter()
                    .map(|t| t.0)
                    .chain(r.poly.quad.iter().flat_map(|t| [t.0, t.1]))
                    .collect();
                idx.sort_unstable();
                idx.dedup();
                idx.into_iter()
                    .map(|i| (i, std::mem::take(&mut g[i])))
                    .collect()
            })
            .collect()
    }

    pub(crate) fn row_violation(r: &Row, v: f64) -> f64 {
        match r.kind {
            RowKind::Eq => v.abs(),
            RowKind::Ge => (-v).max(0.0),
        }
    }

    /// Largest scaled violation at `y`, including rows made constant by
    /// fixing.
    pub fn max_violation(&self, y: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| Self::row_violation(r, r.poly.value(y)))
            .fold(self.fixed_violation, f64::max)
    }

    /// Sum of squared scaled violations.
    pub fn violation_merit(&self, y: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| Self::row_violation(r, r.poly.value(y)).powi(2))
            .sum::<f64>()
            + self.fixed_violation.powi(2)
    }

    /// Model objective at a scaled point.
    pub fn objective(&self, y: &[f64]) -> f64 {
        self.objective.value(y)
    }

    /// Copy with every area row asking for the opposite orientation.
    pub fn with_flipped_area(&self) -> NlpProblem {
        let mut p = self.clone();
        for r in p.rows.iter_mut().filter(|r| r.area) {
            let c = r.poly.constant;
            r.poly = r.poly.negated();
            r.poly.constant = c;
        }
        p
    }

    pub fn has_area_rows(&self) -> bool {
        self.rows.iter().any(|r| r.area)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BinaryCount, Metadata, ModelKind, VarKind};

    fn tiny() -> ModelIR {
        let mut m = ModelIR::new(Metadata {
            kind: ModelKind::Fragment,
            k: 1,
            t: 1,
            s: 1,
            box_side: 2.0,
            epsilon: 0.0,
            lambda: 0.0,
            binaries: BinaryCount::default(),
            binary_budget: 0,
            constraint_counts: Default::default(),
        });
        let x = m.continuous("x", -1.0, 1.0, Tag::Realizability);
        let y = m.continuous("y", -1.0, 1.0, Tag::Realizability);
        let b = m.add_var("b", VarKind::Binary, 0.0, 1.0, Tag::NodeUsage);
        m.linear(
            "le",
            vec![(x, 1.0), (y, -1.0)],
            Sense::Le,
            0.5,
            Tag::Realizability,
        );
        m.linear(
            "ge",
            vec![(x, 1.0), (y, -1.0)],
            Sense::Ge,
            0.5,
            Tag::Realizability,
        );
        m.linear(
            "gated",
            vec![(x, 1.0), (b, -4.0)],
            Sense::Le,
            0.0,
            Tag::Realizability,
        );
        m.quadratic(
            "circle",
            vec![(x, x, 1.0), (y, y, 1.0)],
            vec![],
            Sense::Le,
            0.25,
            Tag::Realizability,
        );
        m
    }

    #[test]
    fn opposite_rows_merge_and_redundant_rows_drop() {
        let m = tiny();
        let mut fx = Fixings::default();
        fx.fix(2, 1.0);
        let p = NlpProblem::new(&m, &fx);
        // le+ge merge into x = y + 0.5, which is eliminated; the gated row
        // is slack for b = 1 and x ≥ −1 always holds, leaving the circle and
        // x ≤ 1
        assert_eq!(p.row_count(), 2);
        assert_eq!(p.equality_count(), 0);
        assert_eq!(p.dim(), 1);
        assert_eq!(p.model_index(0), 1);
        assert!(p.row_name(1).starts_with("bound_"));
    }

    #[test]
    fn scaling_round_trips() {
        let m = tiny();
        let p = NlpProblem::new(&m, &Fixings::default());
        let x = vec![0.3, -0.2, 0.25];
        let y = p.to_scaled(&x);
        let back = p.to_full(&y);
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_rows_report_violation() {
        let m = tiny();
        let mut fx = Fixings::default();
        fx.fix(0, 1.0);
        fx.fix(1, 0.0);
        fx.fix(2, 0.0);
        let p = NlpProblem::new(&m, &fx);
        assert_eq!(p.dim(), 0);
        // each miss is relative to the row's coefficient mass: the circle
        // misses by 0.75 out of 2, the gated row by 1 out of 5
        assert!((p.fixed_violation() - 0.375).abs() < 1e-12);
    }
}
