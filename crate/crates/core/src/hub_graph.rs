//! Complete digraph over hubs weighted by shortest-path distance.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::Network;
use crate::NodeId;

/// Relative slack allowed when checking the triangle inequality on imported matrices.
const TRIANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum HubGraphError {
    #[error("hub list is empty")]
    NoHubs,
    #[error("hub {hub} is not a node of the network (1..={node_count})")]
    InvalidHub { hub: NodeId, node_count: usize },
    #[error("hub {0} listed twice")]
    DuplicateHub(NodeId),
    #[error("hub {to} is unreachable from hub {from}")]
    Unreachable { from: NodeId, to: NodeId },
    #[error("distance matrix: {0}")]
    BadMatrix(String),
    #[error("triangle inequality fails for hubs {a} -> {b} -> {c}")]
    TriangleViolation { a: NodeId, b: NodeId, c: NodeId },
    #[error("csv line {line}: {detail}")]
    Csv { line: usize, detail: String },
}

/// Number format used by [`HubGraph::to_csv`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvPrecision {
    /// Fixed decimals; values below 2 are raised to 2.
    Decimals(usize),
    /// Shortest representation that parses back to the same `f64`.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HubGraphDoc", into = "HubGraphDoc")]
pub struct HubGraph {
    hubs: Vec<NodeId>,
    position: HashMap<NodeId, usize>,
    dist: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct HubGraphDoc {
    hubs: Vec<NodeId>,
    dist: Vec<Vec<f64>>,
}

impl TryFrom<HubGraphDoc> for HubGraph {
    type Error = HubGraphError;
    fn try_from(doc: HubGraphDoc) -> Result<Self, Self::Error> {
        HubGraph::from_matrix(doc.hubs, doc.dist)
    }
}

impl From<HubGraph> for HubGraphDoc {
    fn from(g: HubGraph) -> Self {
        let dist = (0..g.len()).map(|a| g.row(a).to_vec()).collect();
        HubGraphDoc { hubs: g.hubs, dist }
    }
}

fn index_hubs(hubs: &[NodeId]) -> Result<HashMap<NodeId, usize>, HubGraphError> {
    if hubs.is_empty() {
        return Err(HubGraphError::NoHubs);
    }
    let mut position = HashMap::with_capacity(hubs.len());
    for (i, &h) in hubs.iter().enumerate() {
        if position.insert(h, i).is_some() {
            return Err(HubGraphError::DuplicateHub(h));
        }
    }
    Ok(position)
}

fn flatten(hubs: &[NodeId], rows: Vec<Vec<f64>>) -> Result<Vec<f64>, HubGraphError> {
    let n = hubs.len();
    if rows.len() != n {
        return Err(HubGraphError::BadMatrix(format!("{} rows for {n} hubs", rows.len())));
    }
    let mut dist = Vec::with_capacity(n * n);
    for (a, row) in rows.into_iter().enumerate() {
        if row.len() != n {
            return Err(HubGraphError::BadMatrix(format!("row {} has {} entries, expected {n}", hubs[a], row.len())));
        }
        dist.extend(row);
    }
    Ok(dist)
}

impl HubGraph {
    /// Wraps an already metric distance matrix, checking every invariant.
    pub fn from_matrix(hubs: Vec<NodeId>, rows: Vec<Vec<f64>>) -> Result<Self, HubGraphError> {
        let position = index_hubs(&hubs)?;
        let dist = flatten(&hubs, rows)?;
        let g = Self { hubs, position, dist };
        g.validate()?;
        Ok(g)
    }

    /// Takes arbitrary nonnegative direct distances and closes them under
    /// shortest paths (Floyd-Warshall) before validating.
    pub fn metric_closure(hubs: Vec<NodeId>, rows: Vec<Vec<f64>>) -> Result<Self, HubGraphError> {
        let position = index_hubs(&hubs)?;
        let mut dist = flatten(&hubs, rows)?;
        let n = hubs.len();
        for (i, d) in dist.iter().enumerate() {
            if d.is_nan() || *d < 0.0 {
                return Err(HubGraphError::BadMatrix(format!(
                    "entry ({}, {}) = {d} is negative or NaN",
                    hubs[i / n],
                    hubs[i % n]
                )));
            }
        }
        for a in 0..n {
            dist[a * n + a] = 0.0;
        }
        for k in 0..n {
            for i in 0..n {
                let ik = dist[i * n + k];
                if ik.is_infinite() {
                    continue;
                }
                for j in 0..n {
                    let via = ik + dist[k * n + j];
                    if via < dist[i * n + j] {
                        dist[i * n + j] = via;
                    }
                }
            }
        }
        let g = Self { hubs, position, dist };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<(), HubGraphError> {
        let n = self.len();
        for a in 0..n {
            for b in 0..n {
                let d = self.dist[a * n + b];
                if d.is_infinite() && d > 0.0 {
                    return Err(HubGraphError::Unreachable { from: self.hubs[a], to: self.hubs[b] });
                }
                if !d.is_finite() || d < 0.0 {
                    return Err(HubGraphError::BadMatrix(format!(
                        "entry ({}, {}) = {d} is not a finite nonnegative number",
                        self.hubs[a], self.hubs[b]
                    )));
                }
            }
            if self.dist[a * n + a] != 0.0 {
                return Err(HubGraphError::BadMatrix(format!("diagonal entry of hub {} is nonzero", self.hubs[a])));
            }
        }
        if let Some((a, b, c)) = self.triangle_violation(TRIANGLE_TOL) {
            return Err(HubGraphError::TriangleViolation { a: self.hubs[a], b: self.hubs[b], c: self.hubs[c] });
        }
        Ok(())
    }

    /// First index triple `(a, b, c)` with `d(a,c) > d(a,b) + d(b,c)` beyond a relative tolerance.
    pub fn triangle_violation(&self, rel_tol: f64) -> Option<(usize, usize, usize)> {
        let n = self.len();
        for a in 0..n {
            for b in 0..n {
                let ab = self.dist[a * n + b];
                for c in 0..n {
                    let direct = self.dist[a * n + c];
                    let via = ab + self.dist[b * n + c];
                    if direct > via + rel_tol * via.max(1.0) {
                        return Some((a, b, c));
                    }
                }
            }
        }
        None
    }

    pub fn hubs(&self) -> &[NodeId] {
        &self.hubs
    }

    pub fn len(&self) -> usize {
        self.hubs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hubs.is_empty()
    }

    /// Position of a hub id in [`hubs`](Self::hubs).
    pub fn index_of(&self, hub: NodeId) -> Option<usize> {
        self.position.get(&hub).copied()
    }

    /// Distance between hub positions.
    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.hubs.len() + b]
    }

    /// Distance between hub ids, `None` if either is not a hub.
    pub fn dist_between(&self, from: NodeId, to: NodeId) -> Option<f64> {
        Some(self.dist(self.index_of(from)?, self.index_of(to)?))
    }

    pub fn row(&self, a: usize) -> &[f64] {
        let n = self.hubs.len();
        &self.dist[a * n..(a + 1) * n]
    }

    pub fn max_distance(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_csv(&self, precision: CsvPrecision) -> String {
        let mut out = String::from("hub");
        for h in &self.hubs {
            let _ = write!(out, ",{h}");
        }
        out.push('\n');
        for (a, h) in self.hubs.iter().enumerate() {
            let _ = write!(out, "{h}");
            for d in self.row(a) {
                match precision {
                    CsvPrecision::Decimals(p) => {
                        let _ = write!(out, ",{:.*}", p.max(2), d);
                    }
                    CsvPrecision::Full => {
                        let _ = write!(out, ",{d}");
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    /// Reads the format written by [`to_csv`](Self::to_csv). Rounded
    /// matrices are re-closed so the result is always metric.
    pub fn from_csv(text: &str) -> Result<Self, HubGraphError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut records = reader.records();
        let csv_err = |line: usize, detail: String| HubGraphError::Csv { line, detail };

        let header = records
            .next()
            .ok_or_else(|| csv_err(1, "missing header".into()))?
            .map_err(|e| csv_err(1, e.to_string()))?;
        if header.get(0) != Some("hub") {
            return Err(csv_err(1, "header must start with `hub`".into()));
        }
        let hubs = header
            .iter()
            .skip(1)
            .map(|f| f.parse::<NodeId>().map_err(|_| csv_err(1, format!("bad hub id {f:?}"))))
            .collect::<Result<Vec<_>, _>>()?;

        let mut rows = Vec::with_capacity(hubs.len());
        for (k, record) in records.enumerate() {
            let line = k + 2;
            let record = record.map_err(|e| csv_err(line, e.to_string()))?;
            let src = record.get(0).unwrap_or("");
            let expected = hubs.get(k).copied();
            if src.parse::<NodeId>().ok() != expected {
                return Err(csv_err(line, format!("row label {src:?} does not match header order")));
            }
            let row = record
                .iter()
                .skip(1)
                .map(|f| f.parse::<f64>().map_err(|_| csv_err(line, format!("bad distance {f:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Self::metric_closure(hubs, rows)
    }
}

/// Runs one Dijkstra per hub (in parallel) and keeps the hub-to-hub entries.
pub fn build_hub_graph(network: &Network, hubs: &[NodeId]) -> Result<HubGraph, HubGraphError> {
    let position = index_hubs(hubs)?;
    for &h in hubs {
        if h == 0 || h > network.node_count() {
            return Err(HubGraphError::InvalidHub { hub: h, node_count: network.node_count() });
        }
    }
    let adjacency = network.adjacency();
    let rows: Vec<Vec<f64>> = hubs
        .par_iter()
        .map(|&h| {
            let full = adjacency.dijkstra(h - 1);
            hubs.iter().map(|&t| full[t - 1]).collect()
        })
        .collect();
    for (a, row) in rows.iter().enumerate() {
        if let Some(b) = row.iter().position(|d| d.is_infinite()) {
            return Err(HubGraphError::Unreachable { from: hubs[a], to: hubs[b] });
        }
    }
    let dist = flatten(hubs, rows)?;
    Ok(HubGraph { hubs: hubs.to_vec(), position, dist })
}
