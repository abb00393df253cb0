//! Multi-restart simulated annealing over [`QuboModel`]s and sample decoding.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::SrpInstance;
use crate::plan::{validate_plan, FeasibilityReport, PlanError, RoutePlan, Stop, Violation};
use crate::qubo::QuboModel;
use crate::var_index::{ConstraintLabel, Role, VarIndex};

#[derive(Debug, Error, PartialEq)]
pub enum AnnealError {
    #[error("invalid schedule: {0}")]
    BadSchedule(String),
    #[error("assignment has {found} bits, index expects {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Plan(#[from] PlanError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub initial_temperature: f64,
    pub final_temperature: f64,
    pub sweeps: usize,
    pub restarts: usize,
    pub rng_seed: u64,
}

impl AnnealSchedule {
    /// Starts at the largest absolute coefficient and cools geometrically to
    /// a thousandth of it over 1000 sweeps, with 32 restarts.
    pub fn default_for(qubo: &QuboModel, rng_seed: u64) -> Self {
        let t0 = qubo.max_abs_coefficient().max(f64::MIN_POSITIVE);
        Self { initial_temperature: t0, final_temperature: 1e-3 * t0, sweeps: 1000, restarts: 32, rng_seed }
    }

    pub fn validate(&self) -> Result<(), AnnealError> {
        let bad = |s: &str| Err(AnnealError::BadSchedule(s.into()));
        if !(self.final_temperature > 0.0 && self.final_temperature.is_finite()) {
            return bad("final temperature must be positive");
        }
        if !(self.initial_temperature >= self.final_temperature && self.initial_temperature.is_finite()) {
            return bad("initial temperature must be at least the final temperature");
        }
        if self.sweeps == 0 {
            return bad("at least one sweep is required");
        }
        if self.restarts == 0 {
            return bad("at least one restart is required");
        }
        Ok(())
    }

    fn temperature(&self, sweep: usize) -> f64 {
        if self.sweeps == 1 {
            return self.final_temperature;
        }
        let t = sweep as f64 / (self.sweeps - 1) as f64;
        self.initial_temperature * (self.final_temperature / self.initial_temperature).powf(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub assignment: Vec<bool>,
    pub energy: f64,
    pub restart: usize,
}

impl Sample {
    pub fn bitstring(&self) -> String {
        self.assignment.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// Samples sorted by energy (ties by restart number).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub samples: Vec<Sample>,
    pub wall_seconds: f64,
    pub sweeps_executed: usize,
    /// Largest gap seen between incrementally tracked and recomputed energy.
    pub max_energy_drift: f64,
}

impl SampleSet {
    pub fn best(&self) -> Option<&Sample> {
        self.samples.first()
    }
}

/// Symmetric neighbour lists for incremental local fields.
struct Csr {
    offsets: Vec<usize>,
    nbr: Vec<usize>,
    coef: Vec<f64>,
}

impl Csr {
    fn new(q: &QuboModel) -> Self {
        let n = q.num_vars();
        let mut deg = vec![0usize; n + 1];
        for &(i, j, _) in &q.quadratic {
            deg[i + 1] += 1;
            deg[j + 1] += 1;
        }
        for v in 0..n {
            deg[v + 1] += deg[v];
        }
        let mut fill = deg.clone();
        let mut nbr = vec![0; deg[n]];
        let mut coef = vec![0.0; deg[n]];
        for &(i, j, b) in &q.quadratic {
            nbr[fill[i]] = j;
            coef[fill[i]] = b;
            fill[i] += 1;
            nbr[fill[j]] = i;
            coef[fill[j]] = b;
            fill[j] += 1;
        }
        Self { offsets: deg, nbr, coef }
    }

    /// `h_v = a_v + Σ_u b_uv x_u`: the energy change of raising `x_v` to 1.
    fn fields(&self, q: &QuboModel, x: &[bool]) -> Vec<f64> {
        (0..x.len())
            .map(|v| {
                let mut h = q.linear[v];
                for k in self.offsets[v]..self.offsets[v + 1] {
                    if x[self.nbr[k]] {
                        h += self.coef[k];
                    }
                }
                h
            })
            .collect()
    }
}

struct RestartResult {
    best: Vec<bool>,
    drift: f64,
}

/// Decision variables with the slack groups they appear in.
struct SlackLinks {
    /// `(group, coefficient)` per variable.
    member: Vec<Vec<(usize, f64)>>,
    /// Variables proposed for flipping: everything except slack bits.
    movable: Vec<usize>,
}

impl SlackLinks {
    fn new(q: &QuboModel) -> Self {
        let n = q.num_vars();
        let mut member = vec![Vec::new(); n];
        let mut is_slack = vec![false; n];
        for (g, group) in q.slack_groups.iter().enumerate() {
            for &(v, c) in &group.terms {
                member[v].push((g, c));
            }
            for &v in &group.vars {
                is_slack[v] = true;
            }
        }
        Self { member, movable: (0..n).filter(|&v| !is_slack[v]).collect() }
    }
}

/// Applies one flip of `v`, keeping local fields current.
fn flip(csr: &Csr, x: &mut [bool], h: &mut [f64], v: usize) {
    let sign = if x[v] { -1.0 } else { 1.0 };
    x[v] = !x[v];
    for k in csr.offsets[v]..csr.offsets[v + 1] {
        h[csr.nbr[k]] += sign * csr.coef[k];
    }
}

/// One Metropolis chain. Slack bits are never proposed on their own: each
/// proposal flips one model variable and resets the slack of every group it
/// touches to the group optimum, and the move is judged on the combined
/// energy change. Without slack groups this is plain single-flip annealing.
fn run_restart(q: &QuboModel, csr: &Csr, links: &SlackLinks, schedule: &AnnealSchedule, restart: usize) -> RestartResult {
    let n = q.num_vars();
    let groups = &q.slack_groups;
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.rng_seed);
    rng.set_stream(restart as u64);
    let mut x: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
    q.optimize_slack(&mut x);
    let mut lhs: Vec<f64> = groups.iter().map(|g| g.lhs(&x)).collect();
    let mut slack: Vec<u64> = groups.iter().zip(&lhs).map(|(g, &l)| g.best_value(l)).collect();
    let mut h = csr.fields(q, &x);
    let mut energy = q.energy(&x);
    let mut best = x.clone();
    let mut best_energy = energy;
    let mut drift: f64 = 0.0;
    let mut updates: Vec<(usize, f64, u64)> = Vec::new();

    for sweep in 0..schedule.sweeps {
        let beta = 1.0 / schedule.temperature(sweep);
        for &v in &links.movable {
            let mut delta = if x[v] { -h[v] } else { h[v] };
            let step = if x[v] { -1.0 } else { 1.0 };
            updates.clear();
            for &(g, c) in &links.member[v] {
                let group = &groups[g];
                let new_lhs = lhs[g] + step * c;
                let r = new_lhs - group.rhs;
                let (old_s, new_s) = (slack[g] as f64, group.best_value(new_lhs));
                delta += group.weight * ((r + new_s as f64).powi(2) - (r + old_s).powi(2));
                updates.push((g, new_lhs, new_s));
            }
            // uphill moves beyond e^-40 are rejected without a draw
            let arg = delta * beta;
            if delta <= 0.0 || (arg < 40.0 && rng.gen::<f64>() < (-arg).exp()) {
                flip(csr, &mut x, &mut h, v);
                for &(g, new_lhs, new_s) in &updates {
                    lhs[g] = new_lhs;
                    if new_s != slack[g] {
                        let group = &groups[g];
                        for (&u, b) in group.vars.iter().zip(group.bits(new_s)) {
                            if x[u] != b {
                                flip(csr, &mut x, &mut h, u);
                            }
                        }
                        slack[g] = new_s;
                    }
                }
                energy += delta;
                if energy < best_energy - 1e-9 {
                    best_energy = energy;
                    best.clone_from(&x);
                }
            }
        }
        let exact = q.energy(&x);
        drift = drift.max((exact - energy).abs());
        energy = exact;
        if sweep % 64 == 63 {
            h = csr.fields(q, &x);
        }
    }
    RestartResult { best, drift }
}

/// Runs `restarts` independent annealing chains (in parallel) and returns
/// each chain's lowest-energy state with its slack bits set optimally for
/// its decision bits. Chain `r` draws from stream `r` of the seeded generator,
/// so the result does not depend on thread scheduling.
pub fn anneal(qubo: &QuboModel, schedule: &AnnealSchedule) -> Result<SampleSet, AnnealError> {
    schedule.validate()?;
    let start = Instant::now();
    if qubo.num_vars() == 0 {
        return Ok(SampleSet {
            samples: vec![Sample { assignment: Vec::new(), energy: qubo.energy(&[]), restart: 0 }],
            wall_seconds: start.elapsed().as_secs_f64(),
            sweeps_executed: 0,
            max_energy_drift: 0.0,
        });
    }
    let csr = Csr::new(qubo);
    let links = SlackLinks::new(qubo);
    let results: Vec<RestartResult> =
        (0..schedule.restarts).into_par_iter().map(|r| run_restart(qubo, &csr, &links, schedule, r)).collect();
    let mut max_energy_drift: f64 = 0.0;
    let mut samples: Vec<Sample> = results
        .into_iter()
        .enumerate()
        .map(|(restart, mut res)| {
            max_energy_drift = max_energy_drift.max(res.drift);
            qubo.optimize_slack(&mut res.best);
            let energy = qubo.energy(&res.best);
            Sample { assignment: res.best, energy, restart }
        })
        .collect();
    samples.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.restart.cmp(&b.restart)));
    Ok(SampleSet {
        samples,
        wall_seconds: start.elapsed().as_secs_f64(),
        sweeps_executed: schedule.sweeps * schedule.restarts,
        max_energy_drift,
    })
}

/// Reads routes off the `X`/`Y`/`Z` bits (the first `index.num_binary()`
/// entries; trailing slack bits are ignored). Structural problems in the bits
/// are reported alongside the plan's own violations; nothing is repaired.
pub fn decode_sample(
    instance: &SrpInstance,
    assignment: &[bool],
    index: &VarIndex,
) -> Result<(RoutePlan, FeasibilityReport), AnnealError> {
    use ConstraintLabel::*;
    let expected = index.num_binary();
    if assignment.len() < expected || index.requests() != instance.m() || index.trucks() != instance.k() {
        return Err(AnnealError::LengthMismatch { expected, found: assignment.len() });
    }
    let (m, k, stops) = (index.requests(), index.trucks(), index.stops());
    let mut violations = Vec::new();
    let mut routes = Vec::with_capacity(k);
    for j in 0..k {
        let mut route = Vec::new();
        let mut gap_at = None;
        let mut first_stop_load = false;
        for p in 1..=stops {
            let set: Vec<Stop> = (0..m)
                .flat_map(|i| {
                    let x = assignment[index.stop(Role::X, i, j, p)].then(|| Stop::load(i));
                    let y = assignment[index.stop(Role::Y, i, j, p)].then(|| Stop::unload(i));
                    x.into_iter().chain(y)
                })
                .collect();
            if set.len() > 1 {
                let names: Vec<String> = set.iter().map(|s| format!("{:?} {}", s.action, s.request + 1)).collect();
                violations.push(Violation {
                    label: C2,
                    detail: format!("truck {} stop {p} holds {}", j + 1, names.join(" and ")),
                });
            }
            if set.is_empty() {
                gap_at.get_or_insert(p);
            } else if let Some(g) = gap_at {
                violations.push(Violation {
                    label: C8,
                    detail: format!("truck {} stop {p} is occupied after empty stop {g}", j + 1),
                });
                gap_at = None;
            }
            if p == 1 {
                first_stop_load = set.iter().any(|s| s.action == crate::plan::Action::Load);
            }
            route.extend(set);
        }
        let used = assignment[index.used(j)];
        if used && !first_stop_load {
            violations.push(Violation { label: C7, detail: format!("truck {} is rented but stop 1 has no load", j + 1) });
        }
        if !used && !route.is_empty() {
            violations.push(Violation { label: C5, detail: format!("truck {} has stops but is not rented", j + 1) });
        }
        routes.push(route);
    }
    let plan = RoutePlan { routes };
    let mut report = validate_plan(instance, &plan)?;
    violations.append(&mut report.violations);
    Ok((plan, FeasibilityReport::from_violations(violations)))
}
