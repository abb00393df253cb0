//! Constrained quadratic formulation over the `X`/`Y`/`Z` binaries.

use serde::{Deserialize, Serialize};

use crate::expr::{LinExpr, QuadBuilder, QuadExpr, Sense};
use crate::instance::SrpInstance;
use crate::milp::{routing_rows, LinearConstraint, MilpError, ModelStats};
use crate::var_index::{ConstraintLabel, Role, VarIndex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadConstraint {
    pub label: ConstraintLabel,
    pub name: String,
    pub expr: QuadExpr,
    pub sense: Sense,
    pub rhs: f64,
    /// Linear rows used for penalty compilation. Together with the linear
    /// constraints they admit exactly the assignments the product rows admit.
    pub penalty_rows: Vec<LinearConstraint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CqmModel {
    pub index: VarIndex,
    pub linear: Vec<LinearConstraint>,
    pub quadratic: Vec<QuadConstraint>,
    pub objective: QuadExpr,
    pub with_dispatch: bool,
    /// Upper bound on the objective of any feasible assignment.
    pub feasible_objective_max: f64,
}

impl CqmModel {
    pub fn num_variables(&self) -> usize {
        self.index.num_binary()
    }

    pub fn stats(&self) -> ModelStats {
        let n = self.num_variables();
        ModelStats { variables: n, binary: n, continuous: 0, constraints: self.linear.len() + self.quadratic.len() }
    }

    pub fn objective_value(&self, bits: &[bool]) -> f64 {
        self.objective.eval_bits(bits)
    }

    /// Labels of every violated constraint, in model order.
    pub fn violated(&self, bits: &[bool]) -> Vec<ConstraintLabel> {
        let linear = self.linear.iter().filter(|c| !c.sense.holds(c.expr.eval_bits(bits), c.rhs, 0.0)).map(|c| c.label);
        let quad =
            self.quadratic.iter().filter(|c| !c.sense.holds(c.expr.eval_bits(bits), c.rhs, 0.0)).map(|c| c.label);
        linear.chain(quad).collect()
    }

    pub fn is_feasible(&self, bits: &[bool]) -> bool {
        self.violated(bits).is_empty()
    }

    /// Smallest value the objective can take on any binary point.
    pub fn objective_lower_bound(&self) -> f64 {
        self.objective.constant + self.objective.negative_mass()
    }
}

/// Builds the quadratic model. Rows 1 to 7 coincide with the linear model;
/// row 8 is the product form `occ(p−1)·occ(p) ≥ occ(p+1)`.
pub fn build_cqm(instance: &SrpInstance, with_dispatch: bool) -> Result<CqmModel, MilpError> {
    use ConstraintLabel::*;
    let depot = if with_dispatch { Some(instance.dispatch_index().ok_or(MilpError::NoDispatchHub)?) } else { None };
    let (m, k) = (instance.m(), instance.k());
    let index = VarIndex::new(m, k);
    let s_max = index.stops();

    let mut counts = [0usize; 8];
    let mut next_name = |label: ConstraintLabel, n: usize| {
        counts[n - 1] += 1;
        format!("{label}_{}", counts[n - 1])
    };
    let mut linear = Vec::new();
    let mut quadratic = Vec::new();
    for row in routing_rows(instance, &index) {
        let expr = LinExpr::from_terms(row.terms);
        if expr.is_empty() {
            continue;
        }
        let label = [D1, D2, D3, D4, D5, D6, D7, D8][row.number - 1];
        let name = next_name(label, row.number);
        let lin = LinearConstraint { label, name: name.clone(), expr, sense: row.sense, rhs: row.rhs };
        if row.number != 8 {
            linear.push(lin);
            continue;
        }
        // recover p from the row: occ(p-1) + occ(p) - 2 occ(p+1) >= 0
        let next_stop = lin.expr.terms.iter().find(|t| t.1 == -2.0).map(|t| t.0).expect("row 8 has a -2 block");
        let (truck, p1) = match index.key(next_stop) {
            Some(crate::var_index::VarKey::Stop { truck, stop, .. }) => (truck, stop),
            _ => unreachable!(),
        };
        let mut b = QuadBuilder::new();
        for a in index.occupancy(truck, p1 - 2) {
            for c in index.occupancy(truck, p1 - 1) {
                b.add_product(a, c, 1.0);
            }
        }
        for c in index.occupancy(truck, p1) {
            b.add_linear(c, -1.0);
        }
        // occ(p) ≥ occ(p+1) for every p: with rows 1 to 7 this admits the
        // same points as the product rows, and each gap is at most one. The
        // first row of a truck also carries occ(1) ≥ occ(2).
        let first = if p1 == 3 { 1 } else { p1 - 1 };
        let penalty_rows = (first..p1)
            .map(|p| {
                let chain = index.occupancy(truck, p).map(|v| (v, 1.0)).chain(index.occupancy(truck, p + 1).map(|v| (v, -1.0)));
                LinearConstraint { expr: LinExpr::from_terms(chain.collect::<Vec<_>>()), ..lin.clone() }
            })
            .collect();
        quadratic.push(QuadConstraint { label, name, expr: b.build(), sense: Sense::Ge, rhs: 0.0, penalty_rows });
    }

    let mut obj = QuadBuilder::new();
    for (j, t) in instance.trucks().iter().enumerate() {
        obj.add_linear(index.used(j), t.rental_fee);
    }
    let c = instance.unit_distance_cost();
    let hub = |role: Role, i: usize| {
        let (s, t) = instance.endpoints(i);
        if role == Role::X {
            s
        } else {
            t
        }
    };
    for j in 0..k {
        for q in 2..=s_max {
            for a in 0..m {
                for ra in [Role::X, Role::Y] {
                    for b in 0..m {
                        for rb in [Role::X, Role::Y] {
                            let d = instance.dist(hub(ra, a), hub(rb, b));
                            obj.add_product(index.stop(ra, a, j, q - 1), index.stop(rb, b, j, q), c * d);
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
                obj.add_linear(index.stop(Role::X, i, j, 1), instance.dist(o, s));
                let back = instance.dist(t, o);
                for q in 1..=s_max {
                    let yq = index.stop(Role::Y, i, j, q);
                    obj.add_linear(yq, back);
                    if q < s_max {
                        for next in index.occupancy(j, q + 1) {
                            obj.add_product(yq, next, -back);
                        }
                    }
                }
            }
        }
    }

    let max_dist = instance.hub_graph().max_distance();
    let rental: f64 = instance.trucks().iter().map(|t| t.rental_fee).sum();
    let mut feasible_objective_max = rental + c * (2 * m) as f64 * max_dist;
    if with_dispatch {
        feasible_objective_max += 2.0 * m.min(k) as f64 * max_dist;
    }
    Ok(CqmModel { index, linear, quadratic, objective: obj.build(), with_dispatch, feasible_objective_max })
}
