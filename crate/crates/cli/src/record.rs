//! Run log rows and their CSV storage.

use std::fs::OpenOptions;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SolverPath {
    Exact,
    MilpEmit,
    Anneal,
}

impl SolverPath {
    pub fn name(self) -> &'static str {
        match self {
            SolverPath::Exact => "exact",
            SolverPath::MilpEmit => "milp-emit",
            SolverPath::Anneal => "anneal",
        }
    }
}

/// One solver run. `objective` is filled exactly when `feasible` is
/// `Some(true)`; `feasible` is empty when the path does not solve
/// (`milp-emit`) or the run failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub network: String,
    pub m: usize,
    pub k: usize,
    pub seed: Option<u64>,
    pub trial: usize,
    pub solver: SolverPath,
    pub dispatch: bool,
    pub variables: Option<usize>,
    pub constraints: Option<usize>,
    pub preprocess_seconds: f64,
    pub solve_seconds: f64,
    pub objective: Option<f64>,
    pub feasible: Option<bool>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn check(&self) -> Result<()> {
        if self.objective.is_some() != (self.feasible == Some(true)) {
            bail!("objective {:?} inconsistent with feasible {:?}", self.objective, self.feasible);
        }
        if self.solver != SolverPath::Exact && self.error.is_none() && self.variables.is_none() {
            bail!("{} run without model counts", self.solver.name());
        }
        Ok(())
    }
}

/// Appends rows, writing the header only when the file is new or empty.
pub fn append_records(path: &Path, records: &[RunRecord]) -> Result<()> {
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening run log {}", path.display()))?;
    let fresh = file.metadata()?.len() == 0;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading run log {}", path.display()))?;
    let mut out = Vec::new();
    for (n, row) in r.deserialize().enumerate() {
        let rec: RunRecord = row.with_context(|| format!("run log row {}", n + 1))?;
        rec.check().with_context(|| format!("run log row {}", n + 1))?;
        out.push(rec);
    }
    Ok(out)
}
