//! Seeded sweeps over networks, request counts, solver paths and trials.

use std::path::PathBuf;

use rayon::prelude::*;
use srp_core::{CostColumn, GenerationSpec};

use crate::record::{RunRecord, SolverPath};
use crate::run::{load_hub_graph, network_name, solve, RunLabel, SolveOptions};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub networks: Vec<PathBuf>,
    pub hubs: Option<Vec<usize>>,
    pub column: CostColumn,
    pub m_values: Vec<usize>,
    pub trials: usize,
    pub seed_base: u64,
    pub solvers: Vec<SolverPath>,
    pub dispatch_modes: Vec<bool>,
    pub restarts: Option<usize>,
    pub sweeps: Option<usize>,
}

impl BenchConfig {
    /// Five trials for m = 1..5 with every solver path, with and without dispatch.
    pub fn new(networks: Vec<PathBuf>) -> Self {
        Self {
            networks,
            hubs: None,
            column: CostColumn::Length,
            m_values: (1..=5).collect(),
            trials: 5,
            seed_base: 0,
            solvers: vec![SolverPath::Exact, SolverPath::MilpEmit, SolverPath::Anneal],
            dispatch_modes: vec![false, true],
            restarts: None,
            sweeps: None,
        }
    }

    /// Trial `t` at size `m` draws its requests with this seed, shared by
    /// every solver path and dispatch mode.
    pub fn trial_seed(&self, m: usize, trial: usize) -> u64 {
        self.seed_base + 1000 * m as u64 + trial as u64
    }
}

struct Job {
    network: usize,
    m: usize,
    solver: SolverPath,
    dispatch: bool,
    trial: usize,
}

/// Runs every (network, m, solver, dispatch, trial) combination. Trials run
/// concurrently; rows come back in that nesting order. A network or
/// instance that fails to load yields error rows and the sweep continues.
pub fn run_bench(config: &BenchConfig) -> Vec<RunRecord> {
    let graphs: Vec<_> = config
        .networks
        .iter()
        .map(|p| (network_name(p), load_hub_graph(p, config.hubs.as_deref(), config.column)))
        .collect();
    let mut jobs = Vec::new();
    for network in 0..graphs.len() {
        for &m in &config.m_values {
            for &solver in &config.solvers {
                for &dispatch in &config.dispatch_modes {
                    for trial in 0..config.trials {
                        jobs.push(Job { network, m, solver, dispatch, trial });
                    }
                }
            }
        }
    }
    jobs.par_iter()
        .map(|job| {
            let (name, loaded) = &graphs[job.network];
            let seed = config.trial_seed(job.m, job.trial);
            let failed = |error: String, preprocess_seconds: f64| RunRecord {
                network: name.clone(),
                m: job.m,
                k: job.m,
                seed: Some(seed),
                trial: job.trial,
                solver: job.solver,
                dispatch: job.dispatch,
                variables: None,
                constraints: None,
                preprocess_seconds,
                solve_seconds: 0.0,
                objective: None,
                feasible: None,
                error: Some(error),
            };
            let (graph, secs) = match loaded {
                Ok(g) => g,
                Err(e) => return failed(format!("{e:#}"), 0.0),
            };
            let instance = match GenerationSpec::new(job.m, seed).build(graph) {
                Ok(i) => i,
                Err(e) => return failed(e.to_string(), *secs),
            };
            let opts = SolveOptions {
                solver: job.solver,
                dispatch: job.dispatch,
                restarts: config.restarts,
                sweeps: config.sweeps,
                anneal_seed: seed,
            };
            let label = RunLabel { network: name, trial: job.trial, preprocess_seconds: *secs };
            solve(&instance, &label, &opts).0
        })
        .collect()
}
