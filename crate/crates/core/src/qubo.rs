//! Penalty compilation of a [`CqmModel`] into an unconstrained binary model.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cqm::CqmModel;
use crate::expr::{QuadBuilder, Sense};
use crate::milp::LinearConstraint;
use crate::var_index::ConstraintLabel;

#[derive(Debug, Error, PartialEq)]
pub enum QuboError {
    #[error("no penalty weight for label {0}")]
    MissingPenalty(ConstraintLabel),
    #[error("penalty weight for {0} must be positive and finite, got {1}")]
    BadPenalty(ConstraintLabel, f64),
    #[error("constraint {0} has coefficients that are not integral after decimal scaling")]
    NonIntegral(String),
    #[error("constraint {0} cannot be satisfied")]
    Unsatisfiable(String),
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
}

/// Penalty weight per constraint label.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Penalties {
    pub weights: BTreeMap<ConstraintLabel, f64>,
}

impl Penalties {
    /// The same weight for every quadratic-model label.
    pub fn uniform(weight: f64) -> Self {
        Self { weights: ConstraintLabel::CQM.iter().map(|&l| (l, weight)).collect() }
    }

    pub fn get(&self, label: ConstraintLabel) -> Result<f64, QuboError> {
        let w = *self.weights.get(&label).ok_or(QuboError::MissingPenalty(label))?;
        if !(w.is_finite() && w > 0.0) {
            return Err(QuboError::BadPenalty(label, w));
        }
        Ok(w)
    }
}

/// `1 + (largest feasible objective) − (smallest objective on any binary
/// point)` for every label, so that each violation costs more than any
/// feasible objective difference.
pub fn default_penalties(model: &CqmModel) -> Penalties {
    let lower = model.objective_lower_bound().min(0.0);
    Penalties::uniform(1.0 + model.feasible_objective_max - lower)
}

/// Slack bits attached to one inequality, with its scaled decision part.
/// The group contributes `weight·(Σ terms + slack − rhs)²` to the energy,
/// and its slack bits appear nowhere else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackGroup {
    pub constraint: String,
    pub vars: Vec<usize>,
    pub coeffs: Vec<u64>,
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
    pub weight: f64,
}

impl SlackGroup {
    fn range(&self) -> u64 {
        self.coeffs.iter().sum()
    }

    /// Slack value minimising the group energy for a given `Σ terms`.
    pub fn best_value(&self, lhs: f64) -> u64 {
        (self.rhs - lhs).round().clamp(0.0, self.range() as f64) as u64
    }

    /// Slack bit values encoding `value`, which must not exceed the range.
    pub fn bits(&self, value: u64) -> Vec<bool> {
        let (last, low) = self.coeffs.split_last().expect("nonempty slack");
        let low_max: u64 = low.iter().sum();
        let use_last = value > low_max;
        let rest = if use_last { value - last } else { value };
        (0..low.len()).map(|k| rest >> k & 1 == 1).chain([use_last]).collect()
    }

    pub fn encode(&self, value: u64, x: &mut [bool]) {
        for (&v, b) in self.vars.iter().zip(self.bits(value)) {
            x[v] = b;
        }
    }

    pub fn lhs(&self, x: &[bool]) -> f64 {
        self.terms.iter().filter(|(v, _)| x[*v]).map(|t| t.1).sum()
    }

    /// Writes the slack bits closest to the residual `rhs − Σ terms`.
    pub fn set_best(&self, x: &mut [bool]) {
        let value = self.best_value(self.lhs(x));
        self.encode(value, x);
    }
}

/// Quadratic binary model `E(x) = Σ a_i x_i + Σ_{i<j} b_ij x_i x_j + constant + offset`.
///
/// `offset` is the declared shift between energy and the objective it
/// encodes; `constant` absorbs expansion constants. The first `num_decision`
/// variables are the model's own binaries, the rest are slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboModel {
    pub num_decision: usize,
    pub linear: Vec<f64>,
    pub quadratic: Vec<(usize, usize, f64)>,
    pub constant: f64,
    pub offset: f64,
    pub slack_groups: Vec<SlackGroup>,
}

impl QuboModel {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_decision: num_vars,
            linear: vec![0.0; num_vars],
            quadratic: Vec::new(),
            constant: 0.0,
            offset: 0.0,
            slack_groups: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn energy(&self, x: &[bool]) -> f64 {
        let mut e = self.constant;
        for (v, &a) in self.linear.iter().enumerate() {
            if x[v] {
                e += a;
            }
        }
        for &(i, j, b) in &self.quadratic {
            if x[i] && x[j] {
                e += b;
            }
        }
        e + self.offset
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.linear.iter().chain(self.quadratic.iter().map(|t| &t.2)).fold(0.0, |acc, c| acc.max(c.abs()))
    }

    /// Sets every slack group to its energy-minimising value for the
    /// current decision bits. Decision bits are left untouched.
    pub fn optimize_slack(&self, x: &mut [bool]) {
        for g in &self.slack_groups {
            g.set_best(x);
        }
    }

    /// Lowest energy reachable with the given decision bits.
    pub fn min_energy_given_decision(&self, decision: &[bool]) -> f64 {
        let mut x = decision.to_vec();
        x.resize(self.num_vars(), false);
        self.optimize_slack(&mut x);
        self.energy(&x)
    }

    /// Sparse coordinate text: `offset`/`constant`/`variables` header lines,
    /// then `i j coefficient` with `i == j` for linear terms.
    pub fn to_coo(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# offset {}", self.offset);
        let _ = writeln!(out, "# constant {}", self.constant);
        let _ = writeln!(out, "# variables {} {}", self.num_vars(), self.num_decision);
        for (v, &a) in self.linear.iter().enumerate() {
            if a != 0.0 {
                let _ = writeln!(out, "{v} {v} {a}");
            }
        }
        for &(i, j, b) in &self.quadratic {
            let _ = writeln!(out, "{i} {j} {b}");
        }
        out
    }

    /// Parses [`to_coo`](Self::to_coo) output. Slack grouping is not part of
    /// the format, so the result has none.
    pub fn from_coo(text: &str) -> Result<Self, QuboError> {
        let mut offset = 0.0;
        let mut constant = 0.0;
        let mut dims = None;
        let mut linear = BTreeMap::new();
        let mut quad = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let err = |d: &str| QuboError::Parse { line: line_no, detail: d.to_string() };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                match it.next() {
                    Some("offset") => offset = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| err("bad offset"))?,
                    Some("constant") => {
                        constant = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| err("bad constant"))?
                    }
                    Some("variables") => {
                        let n: usize = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| err("bad variables"))?;
                        let d: usize = it.next().and_then(|v| v.parse().ok()).unwrap_or(n);
                        dims = Some((n, d));
                    }
                    _ => {}
                }
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let [i, j, c] = f[..] else { return Err(err("expected `i j coefficient`")) };
            let i: usize = i.parse().map_err(|_| err("bad index"))?;
            let j: usize = j.parse().map_err(|_| err("bad index"))?;
            let c: f64 = c.parse().map_err(|_| err("bad coefficient"))?;
            if i == j {
                *linear.entry(i).or_insert(0.0) += c;
            } else {
                *quad.entry((i.min(j), i.max(j))).or_insert(0.0) += c;
            }
        }
        let max_index = linear.keys().copied().chain(quad.keys().map(|k: &(usize, usize)| k.1)).max();
        let (n, d) = dims.unwrap_or_else(|| {
            let n = max_index.map_or(0, |v| v + 1);
            (n, n)
        });
        if max_index.is_some_and(|v| v >= n) {
            return Err(QuboError::Parse { line: 0, detail: "index exceeds declared variable count".into() });
        }
        let mut q = QuboModel::new(n);
        q.num_decision = d.min(n);
        q.offset = offset;
        q.constant = constant;
        for (v, a) in linear {
            q.linear[v] = a;
        }
        q.quadratic = quad.into_iter().map(|((i, j), b)| (i, j, b)).collect();
        Ok(q)
    }
}

/// Smallest `10^k` (k ≤ 6) making every value integral, with the scaled values.
fn integral_scaling(values: &[f64]) -> Option<Vec<i64>> {
    let mut scale = 1.0;
    for _ in 0..=6 {
        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        if scaled.iter().all(|s| (s - s.round()).abs() <= 1e-9 * s.abs().max(1.0)) {
            return Some(scaled.iter().map(|s| s.round() as i64).collect());
        }
        scale *= 10.0;
    }
    None
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Lower bound on the row's left side over points that satisfy the rest of
/// the model; tighter than the termwise bound and so fewer slack bits.
fn feasible_lhs_floor(label: ConstraintLabel) -> Option<f64> {
    match label {
        // a request is loaded at most once, so prefix unloads minus loads ≥ −1
        ConstraintLabel::D4 => Some(-1.0),
        // running load is never negative
        ConstraintLabel::D6 => Some(0.0),
        // occ(p+1) − occ(p) with occupancies in {0,1}
        ConstraintLabel::D8 => Some(-1.0),
        _ => None,
    }
}

fn add_row(
    b: &mut QuadBuilder,
    row: &LinearConstraint,
    weight: f64,
    next_var: &mut usize,
    groups: &mut Vec<SlackGroup>,
) -> Result<(), QuboError> {
    let terms = &row.expr.terms;
    if row.sense == Sense::Eq {
        b.add_square(terms, -row.rhs, weight);
        return Ok(());
    }
    let sign = if row.sense == Sense::Ge { -1.0 } else { 1.0 };
    let mut values: Vec<f64> = terms.iter().map(|t| sign * t.1).collect();
    values.push(sign * row.rhs);
    let ints = integral_scaling(&values).ok_or_else(|| QuboError::NonIntegral(row.name.clone()))?;
    let (coef_ints, rhs_int) = ints.split_at(terms.len());
    let g = coef_ints.iter().fold(0u64, |acc, c| gcd(acc, c.unsigned_abs())).max(1) as i64;
    let coeffs: Vec<f64> = coef_ints.iter().map(|c| (c / g) as f64).collect();
    let rhs = rhs_int[0].div_euclid(g) as f64;

    let natural: f64 = coeffs.iter().filter(|c| **c < 0.0).sum();
    let floor = feasible_lhs_floor(row.label).map_or(natural, |f| natural.max(f));
    let range = rhs - floor;
    if range < 0.0 {
        return Err(QuboError::Unsatisfiable(row.name.clone()));
    }
    let scaled: Vec<(usize, f64)> = terms.iter().zip(&coeffs).map(|(t, c)| (t.0, *c)).collect();
    let range = range as u64;
    if range == 0 {
        b.add_square(&scaled, -rhs, weight);
        return Ok(());
    }
    let bits = 64 - range.leading_zeros() as usize;
    let mut slack_coeffs: Vec<u64> = (0..bits - 1).map(|k| 1u64 << k).collect();
    slack_coeffs.push(range - ((1u64 << (bits - 1)) - 1));
    let vars: Vec<usize> = (0..bits).map(|k| *next_var + k).collect();
    *next_var += bits;
    let mut all = scaled.clone();
    all.extend(vars.iter().zip(&slack_coeffs).map(|(&v, &c)| (v, c as f64)));
    b.add_square(&all, -rhs, weight);
    groups.push(SlackGroup { constraint: row.name.clone(), vars, coeffs: slack_coeffs, terms: scaled, rhs, weight });
    Ok(())
}

/// Objective plus `weight·(lhs − rhs)²` for equalities and
/// `weight·(lhs + slack − rhs)²` for inequalities, with binary slack covering
/// exactly the integer gap range. Product rows are compiled through their
/// linear penalty rows, which keeps the penalty quadratic.
pub fn to_penalty_qubo(model: &CqmModel, penalties: &Penalties) -> Result<QuboModel, QuboError> {
    let num_decision = model.num_variables();
    let mut b = QuadBuilder::new();
    for &(v, c) in &model.objective.linear {
        b.add_linear(v, c);
    }
    for &(i, j, c) in &model.objective.quadratic {
        b.add_product(i, j, c);
    }
    b.add_constant(model.objective.constant);

    let mut next_var = num_decision;
    let mut groups = Vec::new();
    for row in model.linear.iter().chain(model.quadratic.iter().flat_map(|q| &q.penalty_rows)) {
        let w = penalties.get(row.label)?;
        add_row(&mut b, row, w, &mut next_var, &mut groups)?;
    }
    let expr = b.build();
    let mut q = QuboModel::new(next_var);
    q.num_decision = num_decision;
    for (v, a) in expr.linear {
        q.linear[v] = a;
    }
    q.quadratic = expr.quadratic;
    q.constant = expr.constant;
    q.slack_groups = groups;
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::LinExpr;

    fn bits(n: usize, mask: u32) -> Vec<bool> {
        (0..n).map(|k| mask >> k & 1 == 1).collect()
    }

    fn tiny_cqm(linear: Vec<LinearConstraint>, n: usize) -> CqmModel {
        CqmModel {
            index: crate::var_index::VarIndex::new(0, n),
            linear,
            quadratic: Vec::new(),
            objective: Default::default(),
            with_dispatch: false,
            feasible_objective_max: 0.0,
        }
    }

    fn row(label: ConstraintLabel, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> LinearConstraint {
        LinearConstraint { label, name: "r".into(), expr: LinExpr::from_terms(terms), sense, rhs }
    }

    #[test]
    fn equality_penalty() {
        let cqm = tiny_cqm(vec![row(ConstraintLabel::D1, vec![(0, 1.0), (1, 1.0)], Sense::Eq, 1.0)], 2);
        let q = to_penalty_qubo(&cqm, &Penalties::uniform(7.0)).unwrap();
        assert_eq!(q.energy(&[true, false]), 0.0);
        assert_eq!(q.energy(&[false, true]), 0.0);
        assert_eq!(q.energy(&[false, false]), 7.0);
        assert_eq!(q.energy(&[true, true]), 7.0);
    }

    #[test]
    fn slack_covers_exact_range() {
        // 50a + 50b + 50c <= 100 scales to a + b + c <= 2
        let r = row(ConstraintLabel::D2, vec![(0, 50.0), (1, 50.0), (2, 50.0)], Sense::Le, 100.0);
        let q = to_penalty_qubo(&tiny_cqm(vec![r], 3), &Penalties::uniform(1.0)).unwrap();
        assert_eq!(q.num_vars(), 5);
        assert_eq!(q.slack_groups[0].coeffs, vec![1, 1]);
        for mask in 0..8 {
            let d = bits(3, mask);
            let e = q.min_energy_given_decision(&d);
            let ones = mask.count_ones();
            assert_eq!(e, if ones <= 2 { 0.0 } else { 1.0 }, "{d:?}");
            let brute = (0..4).map(|s| {
                let mut x = d.clone();
                x.extend(bits(2, s));
                q.energy(&x)
            });
            assert_eq!(brute.fold(f64::INFINITY, f64::min), e);
        }
    }

    #[test]
    fn capped_encoding() {
        for range in 1..40u64 {
            let r = row(ConstraintLabel::D2, vec![(0, -1.0)], Sense::Le, range as f64 - 1.0);
            let q = to_penalty_qubo(&tiny_cqm(vec![r], 1), &Penalties::uniform(1.0)).unwrap();
            let g = &q.slack_groups[0];
            assert_eq!(g.coeffs.iter().sum::<u64>(), range);
            let n = g.vars.len();
            let mut reachable: Vec<u64> =
                (0..1u32 << n).map(|s| (0..n).filter(|k| s >> k & 1 == 1).map(|k| g.coeffs[k]).sum()).collect();
            reachable.sort();
            reachable.dedup();
            assert_eq!(reachable, (0..=range).collect::<Vec<_>>());
        }
    }

    #[test]
    fn rejects_fractional_rows() {
        let r = row(ConstraintLabel::D6, vec![(0, 1.0 / 3.0)], Sense::Le, 1.0);
        assert_eq!(to_penalty_qubo(&tiny_cqm(vec![r], 1), &Penalties::uniform(1.0)), Err(QuboError::NonIntegral("r".into())));
        let r = row(ConstraintLabel::D6, vec![(0, 0.25)], Sense::Le, 0.5);
        assert!(to_penalty_qubo(&tiny_cqm(vec![r], 1), &Penalties::uniform(1.0)).is_ok());
    }

    #[test]
    fn penalties_validated() {
        let r = row(ConstraintLabel::D1, vec![(0, 1.0), (1, 1.0)], Sense::Eq, 1.0);
        let cqm = tiny_cqm(vec![r], 2);
        assert_eq!(to_penalty_qubo(&cqm, &Penalties::default()), Err(QuboError::MissingPenalty(ConstraintLabel::D1)));
        assert!(matches!(to_penalty_qubo(&cqm, &Penalties::uniform(0.0)), Err(QuboError::BadPenalty(..))));
    }

    #[test]
    fn coo_round_trip() {
        let r = row(ConstraintLabel::D2, vec![(0, 1.0), (1, 1.0)], Sense::Le, 1.0);
        let mut q = to_penalty_qubo(&tiny_cqm(vec![r], 2), &Penalties::uniform(3.0)).unwrap();
        q.offset = 1.5;
        let back = QuboModel::from_coo(&q.to_coo()).unwrap();
        assert_eq!(back.linear, q.linear);
        assert_eq!(back.quadratic, q.quadratic);
        assert_eq!((back.offset, back.constant, back.num_decision), (1.5, q.constant, 2));
        assert!(matches!(QuboModel::from_coo("0 1\n"), Err(QuboError::Parse { line: 1, .. })));
    }

    #[test]
    fn empty_energy_is_offset() {
        let mut q = QuboModel::new(0);
        q.offset = 2.5;
        assert_eq!(q.energy(&[]), 2.5);
    }
}
