//! Independent oracles shared by the integration tests. Nothing here calls
//! the code under test except to read its inputs.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use proptest::prelude::*;

use srp_core::expr::Sense;
use srp_core::milp::VarKind;
use srp_core::plan::Action;
use srp_core::var_index::Role;
use srp_core::{
    build_hub_graph, parse_tntp, CostColumn, CqmModel, GenerationSpec, HubGraph, ModelIR, Network, RoutePlan,
    SrpInstance, Stop, TransportRequest, TruckSpec, VarIndex,
};

pub fn data_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(file)
}

pub fn sioux_falls_network() -> Network {
    let text = std::fs::read_to_string(data_path("SiouxFalls_net.tntp")).expect("Sioux Falls net file");
    parse_tntp(&text, CostColumn::Length).unwrap()
}

pub fn sioux_falls() -> HubGraph {
    let net = sioux_falls_network();
    let hubs: Vec<usize> = (1..=net.node_count()).collect();
    build_hub_graph(&net, &hubs).unwrap()
}

/// Experiment parameters: load 50, capacity 100, fee 1, unit cost 1, K = m.
pub fn paper_instance(graph: &HubGraph, m: usize, seed: u64) -> SrpInstance {
    GenerationSpec::new(m, seed).build(graph).unwrap()
}

/// Asymmetric 4-hub metric with integer distances.
pub fn toy_graph() -> HubGraph {
    let rows = vec![
        vec![0.0, 3.0, 5.0, 4.0],
        vec![2.0, 0.0, 2.0, 6.0],
        vec![5.0, 3.0, 0.0, 4.0],
        vec![4.0, 7.0, 4.0, 0.0],
    ];
    HubGraph::from_matrix(vec![1, 2, 3, 4], rows).unwrap()
}

pub fn toy_instance(pairs: &[(usize, usize, f64)], k: usize, capacity: f64) -> SrpInstance {
    let requests = pairs.iter().map(|&(s, t, load)| TransportRequest { source_hub: s, dest_hub: t, load }).collect();
    let trucks = (0..k).map(|j| TruckSpec { capacity, rental_fee: 1.0 + j as f64 }).collect();
    SrpInstance::new(toy_graph(), requests, trucks, 1.0, Some(2)).unwrap()
}

// ---------------------------------------------------------------------------
// plan enumeration and direct simulation

/// All orderings of a truck's requests where each load precedes its unload.
pub fn interleavings(requests: &[usize]) -> Vec<Vec<Stop>> {
    fn rec(pending: &mut Vec<usize>, loaded: &mut Vec<usize>, acc: &mut Vec<Stop>, out: &mut Vec<Vec<Stop>>) {
        if pending.is_empty() && loaded.is_empty() {
            out.push(acc.clone());
            return;
        }
        for k in 0..pending.len() {
            let r = pending.remove(k);
            loaded.push(r);
            acc.push(Stop { request: r, action: Action::Load });
            rec(pending, loaded, acc, out);
            acc.pop();
            loaded.pop();
            pending.insert(k, r);
        }
        for k in 0..loaded.len() {
            let r = loaded.remove(k);
            acc.push(Stop { request: r, action: Action::Unload });
            rec(pending, loaded, acc, out);
            acc.pop();
            loaded.insert(k, r);
        }
    }
    let mut out = Vec::new();
    rec(&mut requests.to_vec(), &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

/// Every plan that serves each request once with loads before unloads,
/// ignoring capacity.
pub fn all_plans(m: usize, k: usize) -> Vec<RoutePlan> {
    let mut plans = Vec::new();
    let total = k.pow(m as u32);
    for code in 0..total {
        let mut groups = vec![Vec::new(); k];
        let mut c = code;
        for i in 0..m {
            groups[c % k].push(i);
            c /= k;
        }
        let options: Vec<Vec<Vec<Stop>>> = groups.iter().map(|g| interleavings(g)).collect();
        let mut current = vec![0usize; k];
        loop {
            plans.push(RoutePlan { routes: (0..k).map(|j| options[j][current[j]].clone()).collect() });
            let mut j = 0;
            while j < k {
                current[j] += 1;
                if current[j] < options[j].len() {
                    break;
                }
                current[j] = 0;
                j += 1;
            }
            if j == k {
                break;
            }
        }
    }
    plans
}

/// Route legality by direct replay: every request loaded then unloaded once
/// on one truck, and the carried load never above capacity.
pub fn simulate_feasible(inst: &SrpInstance, plan: &RoutePlan) -> bool {
    let m = inst.m();
    let mut seen_load = vec![None; m];
    let mut seen_unload = vec![None; m];
    for (j, route) in plan.routes.iter().enumerate() {
        if route.is_empty() {
            continue;
        }
        if j >= inst.k() {
            return false;
        }
        let mut carried = 0.0;
        let mut aboard = vec![false; m];
        for s in route {
            let load = inst.requests()[s.request].load;
            match s.action {
                Action::Load => {
                    if seen_load[s.request].is_some() {
                        return false;
                    }
                    seen_load[s.request] = Some(j);
                    aboard[s.request] = true;
                    carried += load;
                }
                Action::Unload => {
                    if seen_unload[s.request].is_some() || !aboard[s.request] {
                        return false;
                    }
                    seen_unload[s.request] = Some(j);
                    aboard[s.request] = false;
                    carried -= load;
                }
            }
            if carried > inst.trucks()[j].capacity {
                return false;
            }
        }
    }
    (0..m).all(|i| seen_load[i].is_some() && seen_load[i] == seen_unload[i])
}

fn hub_of(inst: &SrpInstance, s: &Stop) -> usize {
    let r = &inst.requests()[s.request];
    let id = if s.action == Action::Load { r.source_hub } else { r.dest_hub };
    inst.hub_graph().index_of(id).unwrap()
}

/// Dispatch legs of a plan: hub O to each first stop plus each last stop to O.
pub fn dispatch_legs(inst: &SrpInstance, plan: &RoutePlan) -> f64 {
    let o = inst.hub_graph().index_of(inst.dispatch_hub().unwrap()).unwrap();
    let g = inst.hub_graph();
    plan.routes
        .iter()
        .filter(|r| !r.is_empty())
        .map(|r| g.dist(o, hub_of(inst, &r[0])) + g.dist(hub_of(inst, r.last().unwrap()), o))
        .sum()
}

pub fn direct_cost(inst: &SrpInstance, plan: &RoutePlan, with_dispatch: bool) -> f64 {
    let g = inst.hub_graph();
    let mut total = 0.0;
    for (j, route) in plan.routes.iter().enumerate() {
        if route.is_empty() {
            continue;
        }
        total += inst.trucks()[j].rental_fee;
        for w in route.windows(2) {
            total += inst.unit_distance_cost() * g.dist(hub_of(inst, &w[0]), hub_of(inst, &w[1]));
        }
    }
    if with_dispatch {
        total += dispatch_legs(inst, plan);
    }
    total
}

/// Minimum cost over every feasible plan, no pruning.
pub fn brute_force_optimum(inst: &SrpInstance, with_dispatch: bool) -> f64 {
    all_plans(inst.m(), inst.k())
        .iter()
        .filter(|p| simulate_feasible(inst, p))
        .map(|p| direct_cost(inst, p, with_dispatch))
        .fold(f64::INFINITY, f64::min)
}

// ---------------------------------------------------------------------------
// shortest paths

pub fn bellman_ford(net: &Network, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; net.node_count()];
    dist[source - 1] = 0.0;
    for _ in 0..net.node_count() {
        let mut changed = false;
        for e in net.edges() {
            let via = dist[e.from - 1] + e.cost;
            if via < dist[e.to - 1] {
                dist[e.to - 1] = via;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

// ---------------------------------------------------------------------------
// exhaustive feasible-set enumeration

/// A row `Σ coef·Π vars  sense  rhs`; each monomial has one or two variables.
pub struct PolyRow {
    pub terms: Vec<(Vec<usize>, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Depth-first enumeration of all 0/1 assignments of the first `nb`
/// variables satisfying every row. Variables `≥ nb` are continuous and range
/// over `[lo, hi]`. Partial assignments are cut when interval arithmetic
/// proves a row cannot hold; every leaf is checked exactly.
pub fn enumerate_binary(nb: usize, domains: &[(f64, f64)], rows: &[PolyRow]) -> Vec<Vec<bool>> {
    let mut watch: Vec<Vec<usize>> = vec![Vec::new(); nb];
    for (r, row) in rows.iter().enumerate() {
        for (vars, _) in &row.terms {
            for &v in vars {
                if v < nb && watch[v].last() != Some(&r) {
                    watch[v].push(r);
                }
            }
        }
    }
    let mut lo: Vec<f64> = domains.iter().map(|d| d.0).collect();
    let mut hi: Vec<f64> = domains.iter().map(|d| d.1).collect();
    let mut out = Vec::new();

    fn row_possible(row: &PolyRow, lo: &[f64], hi: &[f64]) -> bool {
        let (mut min, mut max) = (0.0, 0.0);
        for (vars, c) in &row.terms {
            let pl: f64 = vars.iter().map(|&v| lo[v]).product();
            let ph: f64 = vars.iter().map(|&v| hi[v]).product();
            let (a, b) = (c * pl, c * ph);
            min += a.min(b);
            max += a.max(b);
        }
        let tol = 1e-9;
        match row.sense {
            Sense::Le => min <= row.rhs + tol,
            Sense::Ge => max >= row.rhs - tol,
            Sense::Eq => min <= row.rhs + tol && max >= row.rhs - tol,
        }
    }

    fn rec(
        v: usize,
        nb: usize,
        lo: &mut Vec<f64>,
        hi: &mut Vec<f64>,
        rows: &[PolyRow],
        watch: &[Vec<usize>],
        out: &mut Vec<Vec<bool>>,
    ) {
        if v == nb {
            if rows.iter().all(|r| row_possible(r, lo, hi)) {
                out.push((0..nb).map(|u| lo[u] == 1.0).collect());
            }
            return;
        }
        let (l0, h0) = (lo[v], hi[v]);
        for val in [0.0, 1.0] {
            if val < l0 || val > h0 {
                continue;
            }
            lo[v] = val;
            hi[v] = val;
            if watch[v].iter().all(|&r| row_possible(&rows[r], lo, hi)) {
                rec(v + 1, nb, lo, hi, rows, watch, out);
            }
        }
        lo[v] = l0;
        hi[v] = h0;
    }
    rec(0, nb, &mut lo, &mut hi, rows, &watch, &mut out);
    out
}

/// Feasible `X`/`Y`/`Z` assignments of a linear model, continuous variables
/// projected out.
pub fn milp_feasible_binaries(model: &ModelIR) -> Vec<Vec<bool>> {
    let nb = model.variables.iter().take_while(|v| v.kind == VarKind::Binary).count();
    assert!(model.variables[nb..].iter().all(|v| v.kind == VarKind::Continuous));
    let domains: Vec<(f64, f64)> = model.variables.iter().map(|v| (v.lb, v.ub)).collect();
    let rows: Vec<PolyRow> = model
        .constraints
        .iter()
        .map(|c| PolyRow {
            terms: c.expr.terms.iter().map(|&(v, a)| (vec![v], a)).collect(),
            sense: c.sense,
            rhs: c.rhs,
        })
        .collect();
    enumerate_binary(nb, &domains, &rows)
}

pub fn cqm_feasible_binaries(model: &CqmModel) -> Vec<Vec<bool>> {
    let n = model.num_variables();
    let mut rows: Vec<PolyRow> = model
        .linear
        .iter()
        .map(|c| PolyRow {
            terms: c.expr.terms.iter().map(|&(v, a)| (vec![v], a)).collect(),
            sense: c.sense,
            rhs: c.rhs,
        })
        .collect();
    for q in &model.quadratic {
        let mut terms: Vec<(Vec<usize>, f64)> = q.expr.linear.iter().map(|&(v, a)| (vec![v], a)).collect();
        terms.extend(q.expr.quadratic.iter().map(|&(i, j, a)| (vec![i, j], a)));
        rows.push(PolyRow { terms, sense: q.sense, rhs: q.rhs - q.expr.constant });
    }
    enumerate_binary(n, &vec![(0.0, 1.0); n], &rows)
}

// ---------------------------------------------------------------------------
// external LP/MIP solver

pub struct LpSolution {
    pub objective: f64,
    pub values: HashMap<String, f64>,
}

/// Minimal reader for the LP text subset produced by the exporter: an
/// objective, `Subject To` rows, `Bounds`, `Binary`, `End`.
pub struct ParsedLp {
    pub objective: Vec<(String, f64)>,
    pub rows: Vec<(String, Vec<(String, f64)>, Sense, f64)>,
    pub bounds: HashMap<String, (f64, f64)>,
    pub binaries: Vec<String>,
    pub order: Vec<String>,
}

fn parse_terms(tokens: &[&str], order: &mut Vec<String>, seen: &mut HashMap<String, ()>) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    let mut sign = 1.0;
    let mut coef = None;
    for &t in tokens {
        match t {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            _ => {
                if let Ok(c) = t.parse::<f64>() {
                    coef = Some(c);
                } else {
                    if seen.insert(t.to_string(), ()).is_none() {
                        order.push(t.to_string());
                    }
                    out.push((t.to_string(), sign * coef.unwrap_or(1.0)));
                    sign = 1.0;
                    coef = None;
                }
            }
        }
    }
    out
}

pub fn parse_lp(text: &str) -> ParsedLp {
    let mut section = "";
    let mut statements: Vec<(String, String)> = Vec::new();
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('\\') {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if ["minimize", "subject to", "bounds", "binary", "end"].contains(&lower.as_str()) {
            section = match lower.as_str() {
                "minimize" => "obj",
                "subject to" => "st",
                "bounds" => "bounds",
                "binary" => "bin",
                _ => "end",
            };
            continue;
        }
        // continuation lines start with whitespace and no row name
        if raw.starts_with("  ") && !statements.is_empty() && section == statements.last().unwrap().0 {
            statements.last_mut().unwrap().1.push(' ');
            statements.last_mut().unwrap().1.push_str(line);
        } else {
            statements.push((section.to_string(), line.to_string()));
        }
    }
    let mut order = Vec::new();
    let mut seen = HashMap::new();
    let mut parsed = ParsedLp {
        objective: Vec::new(),
        rows: Vec::new(),
        bounds: HashMap::new(),
        binaries: Vec::new(),
        order: Vec::new(),
    };
    for (section, body) in statements {
        match section.as_str() {
            "obj" => {
                let body = body.split_once(':').map_or(body.as_str(), |p| p.1);
                let toks: Vec<&str> = body.split_whitespace().collect();
                parsed.objective = parse_terms(&toks, &mut order, &mut seen);
            }
            "st" => {
                let (name, rest) = body.split_once(':').unwrap();
                let toks: Vec<&str> = rest.split_whitespace().collect();
                let pos = toks.iter().position(|t| ["<=", ">=", "="].contains(t)).unwrap();
                let sense = match toks[pos] {
                    "<=" => Sense::Le,
                    ">=" => Sense::Ge,
                    _ => Sense::Eq,
                };
                let rhs: f64 = toks[pos + 1].parse().unwrap();
                let terms = parse_terms(&toks[..pos], &mut order, &mut seen);
                parsed.rows.push((name.trim().to_string(), terms, sense, rhs));
            }
            "bounds" => {
                let toks: Vec<&str> = body.split_whitespace().collect();
                let num = |s: &str| if s == "+inf" { f64::INFINITY } else { s.parse::<f64>().unwrap() };
                match toks.as_slice() {
                    [lo, "<=", name, "<=", hi] => {
                        parsed.bounds.insert(name.to_string(), (num(lo), num(hi)));
                    }
                    [name, "=", v] => {
                        parsed.bounds.insert(name.to_string(), (num(v), num(v)));
                    }
                    other => panic!("unsupported bound {other:?}"),
                }
            }
            "bin" => {
                for name in body.split_whitespace() {
                    if seen.insert(name.to_string(), ()).is_none() {
                        order.push(name.to_string());
                    }
                    parsed.binaries.push(name.to_string());
                }
            }
            _ => {}
        }
    }
    for name in parsed.bounds.keys() {
        if seen.insert(name.clone(), ()).is_none() {
            order.push(name.clone());
        }
    }
    parsed.order = order;
    parsed
}

/// Solves LP text with the pure-Rust `microlp` branch-and-bound solver.
pub fn solve_lp_text(text: &str) -> Option<LpSolution> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};
    let lp = parse_lp(text);
    let obj: HashMap<&str, f64> = lp.objective.iter().map(|(n, c)| (n.as_str(), *c)).collect();
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let mut vars = HashMap::new();
    for name in &lp.order {
        let c = obj.get(name.as_str()).copied().unwrap_or(0.0);
        let is_bin = lp.binaries.contains(name);
        let v = match (is_bin, lp.bounds.get(name)) {
            (true, Some(&(lo, hi))) => problem.add_integer_var(c, (lo as i32, hi as i32)),
            (true, None) => problem.add_binary_var(c),
            (false, Some(&(lo, hi))) => problem.add_var(c, (lo, hi)),
            (false, None) => problem.add_var(c, (0.0, f64::INFINITY)),
        };
        vars.insert(name.clone(), v);
    }
    for (_, terms, sense, rhs) in &lp.rows {
        let expr: Vec<(microlp::Variable, f64)> = terms.iter().map(|(n, c)| (vars[n], *c)).collect();
        let op = match sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Ge => ComparisonOp::Ge,
            Sense::Eq => ComparisonOp::Eq,
        };
        problem.add_constraint(expr.as_slice(), op, *rhs);
    }
    let outcome = problem.solve().ok()?;
    let sol = outcome.solution()?;
    let values = vars.iter().map(|(n, &v)| (n.clone(), sol.var_value(v))).collect();
    Some(LpSolution { objective: sol.objective(), values })
}

// ---------------------------------------------------------------------------
// curve fitting

/// Least-squares cubic `a + b·x + c·x² + d·x³` via normal equations.
pub fn cubic_fit(xs: &[f64], ys: &[f64]) -> [f64; 4] {
    let mut a = [[0.0f64; 5]; 4];
    for (&x, &y) in xs.iter().zip(ys) {
        let pow = [1.0, x, x * x, x * x * x];
        for r in 0..4 {
            for c in 0..4 {
                a[r][c] += pow[r] * pow[c];
            }
            a[r][4] += pow[r] * y;
        }
    }
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        for r in 0..4 {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..5 {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    [a[0][4] / a[0][0], a[1][4] / a[1][1], a[2][4] / a[2][2], a[3][4] / a[3][3]]
}

pub fn eval_cubic(c: &[f64; 4], x: f64) -> f64 {
    c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x
}

/// `X`/`Y`/`Z` bits of a plan, laid out by `index`, padded with zeros to `len`.
pub fn encode_plan(index: &VarIndex, plan: &RoutePlan, len: usize) -> Vec<bool> {
    let mut bits = vec![false; len];
    for (j, route) in plan.routes.iter().enumerate() {
        for (p, s) in route.iter().enumerate() {
            let role = if s.action == Action::Load { Role::X } else { Role::Y };
            bits[index.stop(role, s.request, j, p + 1)] = true;
        }
        bits[index.used(j)] = !route.is_empty();
    }
    bits
}

// ---------------------------------------------------------------------------
// random instances

/// Metric closure of a random integer matrix over 4 hubs.
pub fn random_metric() -> impl Strategy<Value = HubGraph> {
    prop::collection::vec(1u32..20, 16).prop_map(|cells| {
        let rows = (0..4).map(|a| (0..4).map(|b| if a == b { 0.0 } else { cells[4 * a + b] as f64 }).collect()).collect();
        HubGraph::metric_closure(vec![1, 2, 3, 4], rows).unwrap()
    })
}

pub fn random_instance(max_m: usize) -> impl Strategy<Value = SrpInstance> {
    let request = (1usize..=4, 1usize..4, prop::sample::select(vec![20.0, 50.0, 80.0]))
        .prop_map(|(s, shift, load)| TransportRequest { source_hub: s, dest_hub: (s - 1 + shift) % 4 + 1, load });
    let extra_truck = prop::sample::select(vec![50.0, 80.0, 100.0, 160.0]);
    (
        random_metric(),
        prop::collection::vec(request, 1..=max_m),
        prop::collection::vec(extra_truck, 0..3),
        prop::sample::select(vec![0.5, 1.0, 2.0]),
        1usize..=4,
    )
        .prop_map(|(g, requests, extra, c, o)| {
            let trucks = std::iter::once(100.0)
                .chain(extra)
                .map(|capacity| TruckSpec { capacity, rental_fee: capacity / 10.0 })
                .collect();
            SrpInstance::new(g, requests, trucks, c, Some(o)).unwrap()
        })
}

