//! Route plans, feasibility checking and the objective.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::SrpInstance;
use crate::var_index::ConstraintLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Load,
    Unload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Stop {
    pub request: usize,
    pub action: Action,
}

impl Stop {
    pub fn load(request: usize) -> Self {
        Self { request, action: Action::Load }
    }

    pub fn unload(request: usize) -> Self {
        Self { request, action: Action::Unload }
    }

    /// Hub position visited by this stop.
    pub fn hub(&self, instance: &SrpInstance) -> usize {
        let (s, t) = instance.endpoints(self.request);
        match self.action {
            Action::Load => s,
            Action::Unload => t,
        }
    }
}

/// One stop list per truck; unused trucks have empty routes. Plans may list
/// fewer routes than trucks (missing routes are empty).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RoutePlan {
    pub routes: Vec<Vec<Stop>>,
}

impl RoutePlan {
    pub fn empty(trucks: usize) -> Self {
        Self { routes: vec![Vec::new(); trucks] }
    }

    pub fn used_trucks(&self) -> impl Iterator<Item = usize> + '_ {
        self.routes.iter().enumerate().filter(|(_, r)| !r.is_empty()).map(|(j, _)| j)
    }

    /// `(truck, request, action)` triples in truck then route order.
    pub fn flat_key(&self) -> Vec<(usize, usize, Action)> {
        self.routes
            .iter()
            .enumerate()
            .flat_map(|(j, r)| r.iter().map(move |s| (j, s.request, s.action)))
            .collect()
    }
}

impl fmt::Display for RoutePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, route) in self.routes.iter().enumerate() {
            write!(f, "truck {}:", j + 1)?;
            for s in route {
                let tag = match s.action {
                    Action::Load => 'L',
                    Action::Unload => 'U',
                };
                write!(f, " {tag}{}", s.request + 1)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub label: ConstraintLabel,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn from_violations(violations: Vec<Violation>) -> Self {
        Self { feasible: violations.is_empty(), violations }
    }

    pub fn has(&self, label: ConstraintLabel) -> bool {
        self.violations.iter().any(|v| v.label == label)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("route {truck} is nonempty but the instance has only {trucks} trucks")]
    TruckOutOfRange { truck: usize, trucks: usize },
    #[error("truck {truck}, position {position}: request {request} out of range (m = {m})")]
    RequestOutOfRange { truck: usize, position: usize, request: usize, m: usize },
    #[error("plan is infeasible: {0:?}")]
    Infeasible(Vec<Violation>),
    #[error("dispatch objective requested but the instance has no dispatch hub")]
    NoDispatchHub,
}

fn check_indices(instance: &SrpInstance, plan: &RoutePlan) -> Result<(), PlanError> {
    let m = instance.m();
    for (j, route) in plan.routes.iter().enumerate() {
        if j >= instance.k() && !route.is_empty() {
            return Err(PlanError::TruckOutOfRange { truck: j, trucks: instance.k() });
        }
        for (position, s) in route.iter().enumerate() {
            if s.request >= m {
                return Err(PlanError::RequestOutOfRange { truck: j, position, request: s.request, m });
            }
        }
    }
    Ok(())
}

/// Capacity comparison slack, relative to the capacity.
const CAPACITY_TOL: f64 = 1e-9;

/// Checks a plan against every routing rule and reports all violations.
pub fn validate_plan(instance: &SrpInstance, plan: &RoutePlan) -> Result<FeasibilityReport, PlanError> {
    use ConstraintLabel::*;
    check_indices(instance, plan)?;
    let m = instance.m();
    let mut violations = Vec::new();

    // (truck, position) of each load and unload
    let mut loads: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
    let mut unloads: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
    for (j, route) in plan.routes.iter().enumerate() {
        for (pos, s) in route.iter().enumerate() {
            match s.action {
                Action::Load => loads[s.request].push((j, pos)),
                Action::Unload => unloads[s.request].push((j, pos)),
            }
        }
    }
    for i in 0..m {
        let (l, u) = (&loads[i], &unloads[i]);
        if l.is_empty() && u.is_empty() {
            violations.push(Violation { label: C1, detail: format!("request {} is not served", i + 1) });
            continue;
        }
        if l.len() > 1 || u.len() > 1 {
            violations.push(Violation {
                label: A1,
                detail: format!("request {} has {} loads and {} unloads", i + 1, l.len(), u.len()),
            });
            continue;
        }
        match (l.first(), u.first()) {
            (Some(&(jl, pl)), Some(&(ju, pu))) => {
                if jl != ju {
                    violations.push(Violation {
                        label: C3,
                        detail: format!("request {} loaded on truck {} but unloaded on truck {}", i + 1, jl + 1, ju + 1),
                    });
                } else if pu < pl {
                    violations.push(Violation {
                        label: C4,
                        detail: format!("request {} unloaded before it is loaded on truck {}", i + 1, jl + 1),
                    });
                }
            }
            (Some(_), None) => violations
                .push(Violation { label: C3, detail: format!("request {} is loaded but never unloaded", i + 1) }),
            (None, Some(_)) => violations
                .push(Violation { label: C3, detail: format!("request {} is unloaded but never loaded", i + 1) }),
            (None, None) => unreachable!(),
        }
    }

    for (j, route) in plan.routes.iter().enumerate() {
        let Some(first) = route.first() else { continue };
        if first.action == Action::Unload {
            violations.push(Violation { label: C7, detail: format!("truck {} starts with an unload", j + 1) });
        }
        let capacity = instance.trucks()[j].capacity;
        let mut on_board = vec![false; m];
        let mut running = 0.0;
        for (pos, s) in route.iter().enumerate() {
            let load = instance.requests()[s.request].load;
            match s.action {
                Action::Load if !on_board[s.request] => {
                    on_board[s.request] = true;
                    running += load;
                }
                Action::Unload if on_board[s.request] => {
                    on_board[s.request] = false;
                    running -= load;
                }
                _ => {}
            }
            if running > capacity * (1.0 + CAPACITY_TOL) {
                violations.push(Violation {
                    label: C6,
                    detail: format!("truck {} carries {running} > {capacity} after stop {}", j + 1, pos + 1),
                });
                break;
            }
        }
    }
    Ok(FeasibilityReport::from_violations(violations))
}

/// Cost components of a plan.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub rental: f64,
    /// Hub-to-hub distance along routes, before multiplying by the unit cost.
    pub travel: f64,
    /// Dispatch hub to first stop, summed over used trucks.
    pub outbound: f64,
    /// Last stop back to the dispatch hub, summed over used trucks.
    pub inbound: f64,
}

/// Components of the objective. Dispatch legs are zero when `with_dispatch` is false.
pub fn cost_breakdown(instance: &SrpInstance, plan: &RoutePlan, with_dispatch: bool) -> Result<CostBreakdown, PlanError> {
    check_indices(instance, plan)?;
    let depot = if with_dispatch { Some(instance.dispatch_index().ok_or(PlanError::NoDispatchHub)?) } else { None };
    let mut out = CostBreakdown::default();
    for (j, route) in plan.routes.iter().enumerate() {
        let (Some(first), Some(last)) = (route.first(), route.last()) else { continue };
        out.rental += instance.trucks()[j].rental_fee;
        for w in route.windows(2) {
            out.travel += instance.dist(w[0].hub(instance), w[1].hub(instance));
        }
        if let Some(o) = depot {
            out.outbound += instance.dist(o, first.hub(instance));
            out.inbound += instance.dist(last.hub(instance), o);
        }
    }
    Ok(out)
}

/// Rental fees plus unit cost times route distance, plus the dispatch legs
/// when `with_dispatch` is set. Errors on infeasible plans.
pub fn evaluate_objective(instance: &SrpInstance, plan: &RoutePlan, with_dispatch: bool) -> Result<f64, PlanError> {
    let report = validate_plan(instance, plan)?;
    if !report.feasible {
        return Err(PlanError::Infeasible(report.violations));
    }
    let b = cost_breakdown(instance, plan, with_dispatch)?;
    Ok(b.rental + instance.unit_distance_cost() * b.travel + b.outbound + b.inbound)
}
