//! Loading inputs and running one solver path on one instance.

use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use srp_core::qubo::to_penalty_qubo;
use srp_core::{
    anneal, build_cqm, build_hub_graph, build_milp, decode_sample, default_penalties, emit_lp, evaluate_objective,
    parse_tntp, solve_exact, AnnealSchedule, CostColumn, HubGraph, RoutePlan, SrpInstance,
};

use crate::record::{RunRecord, SolverPath};

/// Hub graph from a TNTP net file, or from a hub-graph CSV written by
/// `preprocess` (recognised by the `.csv` extension). Returns the graph and
/// the seconds spent parsing and closing it.
pub fn load_hub_graph(path: &Path, hubs: Option<&[usize]>, column: CostColumn) -> Result<(HubGraph, f64)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let start = Instant::now();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let g = HubGraph::from_csv(&text).with_context(|| format!("parsing {}", path.display()))?;
        return Ok((g, start.elapsed().as_secs_f64()));
    }
    let net = parse_tntp(&text, column).with_context(|| format!("parsing {}", path.display()))?;
    let all: Vec<usize>;
    let hubs = match hubs {
        Some(h) => h,
        None => {
            all = (1..=net.node_count()).collect();
            &all
        }
    };
    let g = build_hub_graph(&net, hubs)?;
    Ok((g, start.elapsed().as_secs_f64()))
}

/// Short name for a network file: the stem without a trailing `_net`.
pub fn network_name(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    stem.strip_suffix("_net").map(str::to_string).unwrap_or(stem)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub solver: SolverPath,
    pub dispatch: bool,
    pub restarts: Option<usize>,
    pub sweeps: Option<usize>,
    pub anneal_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRow {
    pub rank: usize,
    pub energy: f64,
    pub feasible: bool,
    pub objective: Option<f64>,
    pub bitstring: String,
}

/// Everything one run produces besides its record.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub plan: Option<RoutePlan>,
    pub lp: Option<String>,
    pub qubo: Option<String>,
    pub samples: Vec<SampleRow>,
}

pub struct RunLabel<'a> {
    pub network: &'a str,
    pub trial: usize,
    pub preprocess_seconds: f64,
}

/// Runs one path. Failures are recorded in `error`, never returned.
pub fn solve(instance: &SrpInstance, label: &RunLabel, opts: &SolveOptions) -> (RunRecord, Artifacts) {
    let mut rec = RunRecord {
        network: label.network.to_string(),
        m: instance.m(),
        k: instance.k(),
        seed: instance.seed(),
        trial: label.trial,
        solver: opts.solver,
        dispatch: opts.dispatch,
        variables: None,
        constraints: None,
        preprocess_seconds: label.preprocess_seconds,
        solve_seconds: 0.0,
        objective: None,
        feasible: None,
        error: None,
    };
    let mut art = Artifacts::default();
    let start = Instant::now();
    if let Err(e) = run_path(instance, opts, &mut rec, &mut art) {
        // an empty cell would read back as no error
        let msg = format!("{e:#}");
        rec.error = Some(if msg.is_empty() { "unspecified error".into() } else { msg });
        rec.objective = None;
        rec.feasible = None;
    }
    rec.solve_seconds = start.elapsed().as_secs_f64();
    (rec, art)
}

fn run_path(instance: &SrpInstance, opts: &SolveOptions, rec: &mut RunRecord, art: &mut Artifacts) -> Result<()> {
    match opts.solver {
        SolverPath::Exact => {
            let sol = solve_exact(instance, opts.dispatch)?;
            rec.objective = Some(sol.objective);
            rec.feasible = Some(true);
            art.plan = Some(sol.plan);
        }
        SolverPath::MilpEmit => {
            let model = build_milp(instance, opts.dispatch)?;
            let stats = model.stats();
            rec.variables = Some(stats.variables);
            rec.constraints = Some(stats.constraints);
            art.lp = Some(emit_lp(&model));
        }
        SolverPath::Anneal => {
            let cqm = build_cqm(instance, opts.dispatch)?;
            let stats = cqm.stats();
            rec.variables = Some(stats.variables);
            rec.constraints = Some(stats.constraints);
            let qubo = to_penalty_qubo(&cqm, &default_penalties(&cqm))?;
            let mut schedule = AnnealSchedule::default_for(&qubo, opts.anneal_seed);
            schedule.restarts = opts.restarts.unwrap_or(schedule.restarts);
            schedule.sweeps = opts.sweeps.unwrap_or(schedule.sweeps);
            let set = anneal(&qubo, &schedule)?;
            rec.feasible = Some(false);
            for (rank, s) in set.samples.iter().enumerate() {
                let (plan, report) = decode_sample(instance, &s.assignment, &cqm.index)?;
                let objective =
                    if report.feasible { Some(evaluate_objective(instance, &plan, opts.dispatch)?) } else { None };
                // samples are sorted by energy, and energy is the objective on feasible points
                if let (Some(obj), None) = (objective, &art.plan) {
                    rec.objective = Some(obj);
                    rec.feasible = Some(true);
                    art.plan = Some(plan);
                }
                art.samples.push(SampleRow {
                    rank: rank + 1,
                    energy: s.energy,
                    feasible: report.feasible,
                    objective,
                    bitstring: s.bitstring(),
                });
            }
            art.qubo = Some(qubo.to_coo());
        }
    }
    Ok(())
}
