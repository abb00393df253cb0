//! Per-configuration summaries of a run log.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::record::{RunRecord, SolverPath};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub network: String,
    pub m: usize,
    pub k: usize,
    pub solver: SolverPath,
    pub dispatch: bool,
    pub runs: usize,
    pub errors: usize,
    pub feasible: usize,
    pub mean_variables: Option<f64>,
    pub mean_constraints: Option<f64>,
    pub mean_preprocess_seconds: f64,
    pub mean_solve_seconds: f64,
    pub mean_objective: Option<f64>,
    pub min_objective: Option<f64>,
    pub max_objective: Option<f64>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| s / n as f64)
}

/// One row per (network, m, K, solver, dispatch), sorted by that key.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, usize, usize, SolverPath, bool), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.network.clone(), r.m, r.k, r.solver, r.dispatch)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((network, m, k, solver, dispatch), rs)| {
            let objectives: Vec<f64> = rs.iter().filter_map(|r| r.objective).collect();
            SummaryRow {
                network,
                m,
                k,
                solver,
                dispatch,
                runs: rs.len(),
                errors: rs.iter().filter(|r| r.error.is_some()).count(),
                feasible: rs.iter().filter(|r| r.feasible == Some(true)).count(),
                mean_variables: mean(rs.iter().filter_map(|r| r.variables).map(|v| v as f64)),
                mean_constraints: mean(rs.iter().filter_map(|r| r.constraints).map(|v| v as f64)),
                mean_preprocess_seconds: mean(rs.iter().map(|r| r.preprocess_seconds)).unwrap_or(0.0),
                mean_solve_seconds: mean(rs.iter().map(|r| r.solve_seconds)).unwrap_or(0.0),
                mean_objective: mean(objectives.iter().copied()),
                min_objective: objectives.iter().copied().reduce(f64::min),
                max_objective: objectives.iter().copied().reduce(f64::max),
            }
        })
        .collect()
}
