//! Branch-and-bound over request insertions, certifying optimal plans for
//! small instances.
//!
//! Requests are placed one at a time (heaviest first). Placing a request
//! picks a truck and both the load and unload positions in that truck's
//! current stop list, so every plan is reached exactly once. Trucks with the
//! same capacity and fee are interchangeable, so only the lowest-indexed
//! unused one of each kind is tried.

use std::cmp::Ordering;
use std::sync::Arc;

use thiserror::Error;

use crate::instance::SrpInstance;
use crate::plan::{evaluate_objective, PlanError, RoutePlan, Stop};

#[derive(Debug, Error, PartialEq)]
pub enum ExactError {
    #[error("{m} requests exceed the exact solver limit of {limit}")]
    TooLarge { m: usize, limit: usize },
    #[error("dispatch objective requested but the instance has no dispatch hub")]
    NoDispatchHub,
    #[error("no feasible plan exists")]
    Infeasible,
    #[error(transparent)]
    Plan(#[from] PlanError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactOptions {
    pub max_requests: usize,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self { max_requests: 6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub plan: RoutePlan,
    pub objective: f64,
    pub nodes_explored: u64,
}

/// A partial plan: the first `depth` requests of the branching order are placed.
#[derive(Debug, Clone)]
pub struct SearchNode<'a> {
    instance: &'a SrpInstance,
    depot: Option<usize>,
    order: Arc<Vec<usize>>,
    depth: usize,
    routes: Vec<Vec<Stop>>,
    route_costs: Vec<f64>,
    cost: f64,
    // bound-side costs, see `route_cost`
    relaxed_costs: Vec<f64>,
    relaxed: f64,
}

impl<'a> SearchNode<'a> {
    pub fn root(instance: &'a SrpInstance, with_dispatch: bool) -> Result<Self, ExactError> {
        let depot = if with_dispatch { Some(instance.dispatch_index().ok_or(ExactError::NoDispatchHub)?) } else { None };
        let mut order: Vec<usize> = (0..instance.m()).collect();
        order.sort_by(|&a, &b| instance.requests()[b].load.total_cmp(&instance.requests()[a].load));
        Ok(Self {
            instance,
            depot,
            order: Arc::new(order),
            depth: 0,
            routes: vec![Vec::new(); instance.k()],
            route_costs: vec![0.0; instance.k()],
            cost: 0.0,
            relaxed_costs: vec![0.0; instance.k()],
            relaxed: 0.0,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn is_complete(&self) -> bool {
        self.depth == self.order.len()
    }

    /// Objective of the partial plan as it stands.
    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn plan(&self) -> RoutePlan {
        RoutePlan { routes: self.routes.clone() }
    }

    /// Route cost, and a relaxation of it that never grows when stops are
    /// removed. The two agree unless dispatch legs (weight 1) outweigh
    /// travel (weight C < 1); then the legs are charged at C too.
    fn route_cost(&self, truck: usize, route: &[Stop]) -> (f64, f64) {
        let (Some(first), Some(last)) = (route.first(), route.last()) else { return (0.0, 0.0) };
        let inst = self.instance;
        let travel: f64 = route.windows(2).map(|w| inst.dist(w[0].hub(inst), w[1].hub(inst))).sum();
        let fee = inst.trucks()[truck].rental_fee;
        let c = inst.unit_distance_cost();
        let Some(o) = self.depot else {
            let exact = fee + c * travel;
            return (exact, exact);
        };
        let legs = inst.dist(o, first.hub(inst)) + inst.dist(last.hub(inst), o);
        let exact = fee + c * travel + legs;
        (exact, if c < 1.0 { fee + c * (travel + legs) } else { exact })
    }

    fn fits(&self, truck: usize, route: &[Stop]) -> bool {
        let capacity = self.instance.trucks()[truck].capacity;
        let mut running = 0.0;
        for s in route {
            let l = self.instance.requests()[s.request].load;
            running += if s.action == crate::plan::Action::Load { l } else { -l };
            if running > capacity * (1.0 + 1e-9) {
                return false;
            }
        }
        true
    }

    /// Every way to insert `request` into `truck`'s route, as (new route, its
    /// cost, its relaxed cost).
    fn insertions(&self, truck: usize, request: usize) -> Vec<(Vec<Stop>, f64, f64)> {
        let route = &self.routes[truck];
        let n = route.len();
        let mut out = Vec::new();
        if self.instance.requests()[request].load > self.instance.trucks()[truck].capacity {
            return out;
        }
        for a in 0..=n {
            for b in a + 1..=n + 1 {
                let mut r = Vec::with_capacity(n + 2);
                r.extend_from_slice(&route[..a]);
                r.push(Stop::load(request));
                r.extend_from_slice(&route[a..b - 1]);
                r.push(Stop::unload(request));
                r.extend_from_slice(&route[b - 1..]);
                if self.fits(truck, &r) {
                    let (c, relaxed) = self.route_cost(truck, &r);
                    out.push((r, c, relaxed));
                }
            }
        }
        out
    }

    fn candidate_trucks(&self) -> Vec<usize> {
        let k = self.routes.len();
        (0..k)
            .filter(|&j| {
                !self.routes[j].is_empty()
                    || !(0..j).any(|i| self.routes[i].is_empty() && self.instance.same_class(i, j))
            })
            .collect()
    }

    /// Children in order of nondecreasing cost.
    pub fn children(&self) -> Vec<SearchNode<'a>> {
        if self.is_complete() {
            return Vec::new();
        }
        let request = self.order[self.depth];
        let mut out = Vec::new();
        for j in self.candidate_trucks() {
            for (route, rc, relaxed) in self.insertions(j, request) {
                let mut child = self.clone();
                child.depth += 1;
                child.cost = self.cost - self.route_costs[j] + rc;
                child.relaxed = self.relaxed - self.relaxed_costs[j] + relaxed;
                child.routes[j] = route;
                child.route_costs[j] = rc;
                child.relaxed_costs[j] = relaxed;
                out.push(child);
            }
        }
        out.sort_by(|a, b| a.cost.total_cmp(&b.cost));
        out
    }

    /// Cheapest relaxed increase from adding `request` alone to this partial plan.
    fn min_insertion(&self, request: usize) -> f64 {
        let mut best = f64::INFINITY;
        for j in 0..self.routes.len() {
            for (_, _, relaxed) in self.insertions(j, request) {
                best = best.min(relaxed - self.relaxed_costs[j]);
            }
        }
        best
    }

    /// Relaxed partial cost plus, over the unplaced requests, the largest
    /// cheapest single-request relaxed insertion increase. Dropping stops from
    /// any completion never raises its relaxed cost (triangle inequality), so
    /// the completion restricted to placed requests plus one more already
    /// costs this much, and the relaxed cost never exceeds the true one.
    pub fn lower_bound(&self) -> f64 {
        let extra = self.order[self.depth..].iter().map(|&r| self.min_insertion(r)).fold(0.0, f64::max);
        self.relaxed + extra
    }
}

/// Permutes routes among interchangeable trucks into sorted order (nonempty
/// first), the smallest representative of the plan's symmetry class.
fn canonical(instance: &SrpInstance, mut plan: RoutePlan) -> RoutePlan {
    let k = instance.k();
    let mut start = 0;
    while start < k {
        let mut end = start + 1;
        while end < k && instance.same_class(start, end) {
            end += 1;
        }
        plan.routes[start..end].sort_by(|a, b| match (a.is_empty(), b.is_empty()) {
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            _ => a.cmp(b),
        });
        start = end;
    }
    plan
}

struct Search<'a> {
    instance: &'a SrpInstance,
    best: Option<(f64, RoutePlan, Vec<(usize, usize, crate::plan::Action)>)>,
    nodes: u64,
}

impl Search<'_> {
    fn tolerance(&self) -> f64 {
        self.best.as_ref().map_or(0.0, |b| 1e-9 * b.0.abs().max(1.0))
    }

    fn visit(&mut self, node: &SearchNode<'_>) {
        self.nodes += 1;
        if let Some((best, ..)) = &self.best {
            if node.lower_bound() > best + self.tolerance() {
                return;
            }
        }
        if node.is_complete() {
            let plan = canonical(self.instance, node.plan());
            let key = plan.flat_key();
            let tol = self.tolerance();
            let replace = match &self.best {
                None => true,
                Some((c, _, k)) => node.cost < c - tol || (node.cost <= c + tol && key < *k),
            };
            if replace {
                self.best = Some((node.cost, plan, key));
            }
            return;
        }
        for child in node.children() {
            self.visit(&child);
        }
    }
}

pub fn solve_exact(instance: &SrpInstance, with_dispatch: bool) -> Result<ExactSolution, ExactError> {
    solve_exact_with(instance, with_dispatch, &ExactOptions::default())
}

/// Certified optimum. Among plans within `1e-9` relative cost of the best,
/// returns the one with the smallest `(truck, request, action)` sequence.
pub fn solve_exact_with(
    instance: &SrpInstance,
    with_dispatch: bool,
    options: &ExactOptions,
) -> Result<ExactSolution, ExactError> {
    if instance.m() > options.max_requests {
        return Err(ExactError::TooLarge { m: instance.m(), limit: options.max_requests });
    }
    let root = SearchNode::root(instance, with_dispatch)?;
    let mut search = Search { instance, best: None, nodes: 0 };
    search.visit(&root);
    let (_, plan, _) = search.best.ok_or(ExactError::Infeasible)?;
    let objective = evaluate_objective(instance, &plan, with_dispatch)?;
    Ok(ExactSolution { plan, objective, nodes_explored: search.nodes })
}
