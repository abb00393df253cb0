//! Mixed-integer linear formulation over `X`/`Y`/`Z` plus linearised products.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{DisplayLin, LinExpr, Sense};
use crate::instance::SrpInstance;
use crate::var_index::{ConstraintLabel, Role, VarIndex, VarKey};

#[derive(Debug, Error, PartialEq)]
pub enum MilpError {
    #[error("product variable {0} would get negative objective coefficient {1}")]
    NegativeCoefficient(String, f64),
    #[error("variable {0} is not binary")]
    NotBinary(usize),
    #[error("dispatch model requested but the instance has no dispatch hub")]
    NoDispatchHub,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub label: ConstraintLabel,
    pub name: String,
    pub expr: LinExpr,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn holds(&self, x: &[f64], tol: f64) -> bool {
        self.sense.holds(self.expr.eval(x), self.rhs, tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelStats {
    pub variables: usize,
    pub binary: usize,
    pub continuous: usize,
    pub constraints: usize,
}

impl ModelStats {
    /// Counts of [`build_milp`] with pruning disabled, for `m ≥ 1`.
    pub fn unpruned(m: usize, k: usize, with_dispatch: bool) -> ModelStats {
        if m == 0 {
            return ModelStats { variables: k, binary: k, continuous: 0, constraints: 0 };
        }
        let binary = 4 * m * m * k + k;
        let legs = 4 * m * m * k * (2 * m - 1);
        let last = if with_dispatch { m * k * (2 * m - 1) } else { 0 };
        let core = 2 * m + 2 * m * k + m * k + m * k * (2 * m - 1) + 2 * m * k + 2 * m * k + k + k * (2 * m - 2);
        ModelStats {
            variables: binary + legs + last,
            binary,
            continuous: legs + last,
            constraints: core + legs + last,
        }
    }
}

/// Solver-agnostic linear model, always minimising.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelIR {
    pub variables: Vec<Variable>,
    pub constraints: Vec<LinearConstraint>,
    pub objective: LinExpr,
    pub index: VarIndex,
    pub with_dispatch: bool,
    #[serde(skip)]
    label_counts: HashMap<ConstraintLabel, usize>,
}

impl Default for ModelIR {
    fn default() -> Self {
        Self::new(VarIndex::new(0, 0))
    }
}

impl ModelIR {
    /// Model holding the `X`/`Y`/`Z` binaries of `index` and nothing else.
    pub fn new(index: VarIndex) -> Self {
        let variables = (0..index.len())
            .map(|id| Variable { name: index.key(id).expect("dense ids").name(), kind: VarKind::Binary, lb: 0.0, ub: 1.0 })
            .collect();
        Self {
            variables,
            constraints: Vec::new(),
            objective: LinExpr::new(),
            index,
            with_dispatch: false,
            label_counts: HashMap::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lb: f64, ub: f64) -> usize {
        self.variables.push(Variable { name: name.into(), kind, lb, ub });
        self.variables.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        label: ConstraintLabel,
        terms: impl IntoIterator<Item = (usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        let counter = self.label_counts.entry(label).or_insert(0);
        *counter += 1;
        let name = format!("{label}_{counter}");
        self.constraints.push(LinearConstraint { label, name, expr: LinExpr::from_terms(terms), sense, rhs });
        self.constraints.len() - 1
    }

    pub fn add_objective(&mut self, var: usize, coeff: f64) {
        if coeff != 0.0 {
            self.objective.terms.push((var, coeff));
        }
    }

    fn require_binary(&self, v: usize) -> Result<(), MilpError> {
        match self.variables.get(v) {
            Some(Variable { kind: VarKind::Binary, .. }) => Ok(()),
            _ => Err(MilpError::NotBinary(v)),
        }
    }

    /// Adds `z ∈ [0,1]` with `z ≥ a + b − 1` and objective `coeff·z`. Since the
    /// objective is minimised with `coeff ≥ 0`, `z = a·b` at every optimum.
    pub fn linearize_and(&mut self, a: usize, b: usize, name: String, coeff: f64) -> Result<usize, MilpError> {
        if coeff < 0.0 {
            return Err(MilpError::NegativeCoefficient(name, coeff));
        }
        self.require_binary(a)?;
        self.require_binary(b)?;
        let z = self.add_var(name, VarKind::Continuous, 0.0, 1.0);
        self.add_constraint(ConstraintLabel::Lin, [(a, 1.0), (b, 1.0), (z, -1.0)], Sense::Le, 1.0);
        self.add_objective(z, coeff);
        Ok(z)
    }

    /// Adds `v ∈ [0,1]` with `v ≥ y − Σ s` and objective `coeff·v`; when
    /// `Σ s ∈ {0,1}` this makes `v = y·(1 − Σ s)` at every optimum.
    pub fn linearize_last_stop(&mut self, y: usize, s: &[usize], name: String, coeff: f64) -> Result<usize, MilpError> {
        if coeff < 0.0 {
            return Err(MilpError::NegativeCoefficient(name, coeff));
        }
        self.require_binary(y)?;
        for &v in s {
            self.require_binary(v)?;
        }
        let v = self.add_var(name, VarKind::Continuous, 0.0, 1.0);
        let terms = std::iter::once((y, 1.0)).chain(s.iter().map(|&x| (x, -1.0))).chain([(v, -1.0)]);
        self.add_constraint(ConstraintLabel::CBeta, terms, Sense::Le, 0.0);
        self.add_objective(v, coeff);
        Ok(v)
    }

    /// Adds a constraint, folding single-variable rows into bounds and
    /// dropping rows without terms that hold trivially.
    fn add_row(&mut self, label: ConstraintLabel, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        let expr = LinExpr::from_terms(terms);
        match expr.terms.as_slice() {
            [] if sense.holds(0.0, rhs, 0.0) => {}
            [(v, c)] => {
                let bound = rhs / c;
                let sense = if *c < 0.0 {
                    match sense {
                        Sense::Le => Sense::Ge,
                        Sense::Ge => Sense::Le,
                        Sense::Eq => Sense::Eq,
                    }
                } else {
                    sense
                };
                let var = &mut self.variables[*v];
                if sense != Sense::Ge {
                    var.ub = var.ub.min(bound);
                }
                if sense != Sense::Le {
                    var.lb = var.lb.max(bound);
                }
            }
            _ => {
                self.add_constraint(label, expr.terms, sense, rhs);
            }
        }
    }

    pub fn stats(&self) -> ModelStats {
        let binary = self.variables.iter().filter(|v| v.kind == VarKind::Binary).count();
        ModelStats {
            variables: self.variables.len(),
            binary,
            continuous: self.variables.len() - binary,
            constraints: self.constraints.len(),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }

    /// Rows violated by `x` beyond `tol`, plus any bound or integrality breach
    /// reported as `None`.
    pub fn violations(&self, x: &[f64], tol: f64) -> Vec<Option<usize>> {
        let mut out = Vec::new();
        for v in 0..self.variables.len() {
            let var = &self.variables[v];
            let integral = var.kind == VarKind::Continuous || x[v] == 0.0 || x[v] == 1.0;
            if x[v] < var.lb - tol || x[v] > var.ub + tol || !integral {
                out.push(None);
            }
        }
        out.extend(self.constraints.iter().enumerate().filter(|(_, c)| !c.holds(x, tol)).map(|(k, _)| Some(k)));
        out
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        self.violations(x, tol).is_empty()
    }

    /// Extends a binary assignment with each continuous variable at the
    /// smallest value its rows allow, which is optimal for nonnegative
    /// objective coefficients.
    pub fn complete_continuous(&self, bits: &[bool]) -> Vec<f64> {
        let mut x: Vec<f64> = self
            .variables
            .iter()
            .enumerate()
            .map(|(v, var)| match var.kind {
                VarKind::Binary => f64::from(u8::from(bits[v])),
                VarKind::Continuous => var.lb,
            })
            .collect();
        for c in &self.constraints {
            let mut continuous = c.expr.terms.iter().filter(|(v, _)| self.variables[*v].kind == VarKind::Continuous);
            let (Some(&(v, coeff)), None) = (continuous.next(), continuous.next()) else { continue };
            if c.sense != Sense::Le || coeff >= 0.0 {
                continue;
            }
            let rest: f64 = c.expr.terms.iter().filter(|(u, _)| *u != v).map(|&(u, a)| a * x[u]).sum();
            let need = (c.rhs - rest) / coeff;
            if need > x[v] {
                x[v] = need;
            }
        }
        x
    }

    /// Objective of a binary assignment with continuous variables completed.
    pub fn objective_for_bits(&self, bits: &[bool]) -> f64 {
        self.evaluate(&self.complete_continuous(bits))
    }

    /// One line per constraint: `label name: expression sense rhs`.
    pub fn debug_dump(&self) -> String {
        let name = |v: usize| self.variables[v].name.clone();
        let mut out = String::new();
        let _ = writeln!(out, "minimize {}", DisplayLin(&self.objective.terms, name));
        for c in &self.constraints {
            let _ =
                writeln!(out, "{} {}: {} {} {}", c.label, c.name, DisplayLin(&c.expr.terms, name), c.sense.symbol(), c.rhs);
        }
        out
    }
}

pub fn count_model(model: &ModelIR) -> ModelStats {
    model.stats()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MilpOptions {
    /// Skip products whose distance coefficient is zero.
    pub prune_zero_distance: bool,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self { prune_zero_distance: true }
    }
}

pub fn build_milp(instance: &SrpInstance, with_dispatch: bool) -> Result<ModelIR, MilpError> {
    build_milp_with(instance, with_dispatch, MilpOptions::default())
}

fn action_hub(instance: &SrpInstance, role: Role, i: usize) -> usize {
    let (s, t) = instance.endpoints(i);
    match role {
        Role::X => s,
        Role::Y => t,
    }
}

pub fn build_milp_with(instance: &SrpInstance, with_dispatch: bool, options: MilpOptions) -> Result<ModelIR, MilpError> {
    use ConstraintLabel::*;
    let depot = if with_dispatch { Some(instance.dispatch_index().ok_or(MilpError::NoDispatchHub)?) } else { None };
    let (m, k) = (instance.m(), instance.k());
    let index = VarIndex::new(m, k);
    let s_max = index.stops();
    let mut model = ModelIR::new(index.clone());
    model.with_dispatch = with_dispatch;
    for row in routing_rows(instance, &index) {
        let label = [C1, C2, C3, C4, C5, C6, C7, C8][row.number - 1];
        model.add_row(label, row.terms, row.sense, row.rhs);
    }

    for j in 0..k {
        model.add_objective(index.used(j), instance.trucks()[j].rental_fee);
    }
    let c = instance.unit_distance_cost();
    let roles = [Role::X, Role::Y];
    for j in 0..k {
        for q in 2..=s_max {
            for a in 0..m {
                for ra in roles {
                    for b in 0..m {
                        for rb in roles {
                            let d = instance.dist(action_hub(instance, ra, a), action_hub(instance, rb, b));
                            if d == 0.0 && options.prune_zero_distance {
                                continue;
                            }
                            let key = VarKey::Leg { truck: j, stop: q, from: (ra, a), to: (rb, b) };
                            let id = model.index.push_aux(key);
                            let z = model.linearize_and(
                                index.stop(ra, a, j, q - 1),
                                index.stop(rb, b, j, q),
                                key.name(),
                                c * d,
                            )?;
                            debug_assert_eq!(id, z);
                        }
                    }
                }
            }
        }
    }
    if let Some(o) = depot {
        for j in 0..k {
            for i in 0..m {
                let (s, t) = instance.endpoints(i);
                model.add_objective(index.stop(Role::X, i, j, 1), instance.dist(o, s));
                let back = instance.dist(t, o);
                if back == 0.0 && options.prune_zero_distance {
                    continue;
                }
                for q in 1..s_max {
                    let key = VarKey::LastStop { request: i, truck: j, stop: q };
                    let id = model.index.push_aux(key);
                    let next: Vec<usize> = index.occupancy(j, q + 1).collect();
                    let v = model.linearize_last_stop(index.stop(Role::Y, i, j, q), &next, key.name(), back)?;
                    debug_assert_eq!(id, v);
                }
                model.add_objective(index.stop(Role::Y, i, j, s_max), back);
            }
        }
    }
    model.objective = LinExpr::from_terms(std::mem::take(&mut model.objective.terms));
    Ok(model)
}


/// One structural routing row; `number` is 1..=8 in constraint order.
pub(crate) struct Row {
    pub number: usize,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    fn new(number: usize, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Self {
        Self { number, terms, sense, rhs }
    }
}

/// Assignment, occupancy, pairing, precedence, usage, capacity, start and
/// contiguity rows shared by the linear and quadratic formulations.
pub(crate) fn routing_rows(instance: &SrpInstance, index: &VarIndex) -> Vec<Row> {
    let (m, k) = (instance.m(), instance.k());
    let s_max = index.stops();
    let mut rows = Vec::new();
    let x = |i, j, p| index.stop(Role::X, i, j, p);
    let y = |i, j, p| index.stop(Role::Y, i, j, p);
    let occ = |j, p| index.occupancy(j, p).map(|v| (v, 1.0));

    for i in 0..m {
        let all_x = (0..k).flat_map(|j| (1..=s_max).map(move |p| (j, p))).map(|(j, p)| (x(i, j, p), 1.0)).collect();
        rows.push(Row::new(1, all_x, Sense::Eq, 1.0));
        let all_y = (0..k).flat_map(|j| (1..=s_max).map(move |p| (j, p))).map(|(j, p)| (y(i, j, p), 1.0)).collect();
        rows.push(Row::new(1, all_y, Sense::Eq, 1.0));
    }
    for j in 0..k {
        for p in 1..=s_max {
            rows.push(Row::new(2, occ(j, p).collect(), Sense::Le, 1.0));
        }
    }
    for i in 0..m {
        for j in 0..k {
            let terms = (1..=s_max).flat_map(|p| [(x(i, j, p), 1.0), (y(i, j, p), -1.0)]).collect();
            rows.push(Row::new(3, terms, Sense::Eq, 0.0));
        }
    }
    for i in 0..m {
        for j in 0..k {
            for q in 1..s_max {
                let terms = (1..=q).flat_map(|p| [(y(i, j, p), 1.0), (x(i, j, p), -1.0)]).collect();
                rows.push(Row::new(4, terms, Sense::Le, 0.0));
            }
        }
    }
    for i in 0..m {
        for j in 0..k {
            let z = index.used(j);
            let xs = (1..=s_max).map(|p| (x(i, j, p), 1.0)).chain([(z, -1.0)]).collect();
            rows.push(Row::new(5, xs, Sense::Le, 0.0));
            let ys = (1..=s_max).map(|p| (y(i, j, p), 1.0)).chain([(z, -1.0)]).collect();
            rows.push(Row::new(5, ys, Sense::Le, 0.0));
        }
    }
    for j in 0..k {
        let cap = instance.trucks()[j].capacity;
        for p in 1..=s_max {
            let terms = (0..m)
                .flat_map(|i| {
                    let l = instance.requests()[i].load;
                    (1..=p).flat_map(move |q| [(x(i, j, q), l), (y(i, j, q), -l)])
                })
                .collect();
            rows.push(Row::new(6, terms, Sense::Le, cap));
        }
    }
    for j in 0..k {
        let terms = (0..m).map(|i| (x(i, j, 1), 1.0)).chain([(index.used(j), -1.0)]).collect();
        rows.push(Row::new(7, terms, Sense::Eq, 0.0));
    }
    for j in 0..k {
        for p in 2..s_max {
            let terms = occ(j, p - 1).chain(occ(j, p)).chain(occ(j, p + 1).map(|(v, _)| (v, -2.0))).collect();
            rows.push(Row::new(8, terms, Sense::Ge, 0.0));
        }
    }

    rows
}

fn lp_number(c: f64) -> String {
    format!("{c}")
}

fn write_lp_expr(out: &mut String, terms: &[(usize, f64)], names: &[Variable]) {
    if terms.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (k, &(v, c)) in terms.iter().enumerate() {
        if k > 0 && k % 8 == 0 {
            out.push_str("\n  ");
        }
        let sign = if c < 0.0 { '-' } else { '+' };
        if k == 0 && c >= 0.0 {
            let _ = write!(out, " {} {}", lp_number(c), names[v].name);
        } else {
            let _ = write!(out, " {sign} {} {}", lp_number(c.abs()), names[v].name);
        }
    }
}

/// Writes the model in CPLEX LP text format. Row names are the constraint
/// names, so labels survive the round trip.
pub fn emit_lp(model: &ModelIR) -> String {
    let mut out = String::from("Minimize\n obj:");
    write_lp_expr(&mut out, &model.objective.terms, &model.variables);
    out.push('\n');
    if !model.constraints.is_empty() {
        out.push_str("Subject To\n");
        for c in &model.constraints {
            let _ = write!(out, " {}:", c.name);
            write_lp_expr(&mut out, &c.expr.terms, &model.variables);
            let _ = writeln!(out, " {} {}", c.sense.symbol(), lp_number(c.rhs));
        }
    }
    let bounded: Vec<&Variable> = model
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Continuous || v.lb != 0.0 || v.ub != 1.0)
        .collect();
    if !bounded.is_empty() {
        out.push_str("Bounds\n");
        for v in bounded {
            if v.lb == v.ub {
                let _ = writeln!(out, " {} = {}", v.name, lp_number(v.lb));
            } else {
                let ub = if v.ub.is_infinite() { "+inf".to_string() } else { lp_number(v.ub) };
                let _ = writeln!(out, " {} <= {} <= {}", lp_number(v.lb), v.name, ub);
            }
        }
    }
    let binaries: Vec<&str> =
        model.variables.iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.name.as_str()).collect();
    if !binaries.is_empty() {
        out.push_str("Binary\n");
        for chunk in binaries.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}
