//! Road networks in the TNTP `*_net.tntp` format and single-source shortest paths.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::NodeId;

#[derive(Debug, Error, PartialEq)]
pub enum TntpError {
    #[error("line {line}: malformed metadata: {detail}")]
    MalformedHeader { line: usize, detail: String },
    #[error("missing metadata field <{0}>")]
    MissingMetadata(&'static str),
    #[error("metadata declares {expected} links but {found} link rows were found")]
    LinkCountMismatch { expected: usize, found: usize },
    #[error("line {line}: expected at least {expected} columns, found {found}")]
    TooFewColumns { line: usize, expected: usize, found: usize },
    #[error("line {line}: field `{field}` is not a number: {value:?}")]
    BadNumber { line: usize, field: &'static str, value: String },
    #[error("line {line}: cost {cost} is negative or not finite")]
    BadCost { line: usize, cost: f64 },
    #[error("line {line}: node {node} is outside 1..={node_count}")]
    NodeOutOfRange { line: usize, node: usize, node_count: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("source node {node} is outside 1..={node_count}")]
    InvalidSource { node: NodeId, node_count: usize },
}

/// Which link column supplies the edge cost.
///
/// Positions follow the fixed TNTP column order
/// `init_node term_node capacity length free_flow_time b power speed toll link_type`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CostColumn {
    Capacity,
    #[default]
    Length,
    FreeFlowTime,
    /// Zero-based column position.
    Index(usize),
}

impl CostColumn {
    pub fn position(self) -> usize {
        match self {
            CostColumn::Capacity => 2,
            CostColumn::Length => 3,
            CostColumn::FreeFlowTime => 4,
            CostColumn::Index(i) => i,
        }
    }

    fn field_name(self) -> &'static str {
        match self {
            CostColumn::Capacity => "capacity",
            CostColumn::Length => "length",
            CostColumn::FreeFlowTime => "free_flow_time",
            CostColumn::Index(_) => "cost",
        }
    }
}

impl FromStr for CostColumn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "capacity" => Ok(CostColumn::Capacity),
            "length" => Ok(CostColumn::Length),
            "free_flow_time" | "free-flow-time" | "fftt" => Ok(CostColumn::FreeFlowTime),
            other => other
                .parse::<usize>()
                .map(CostColumn::Index)
                .map_err(|_| format!("unknown cost column {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub cost: f64,
}

/// Directed road graph with nonnegative edge costs. Nodes are `1..=node_count`.
///
/// Edges are kept exactly as read, including parallel edges and self-loops;
/// shortest-path routines use only the cheapest parallel edge and ignore loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    node_count: usize,
    edges: Vec<Edge>,
}

impl Network {
    pub fn new(node_count: usize, edges: Vec<Edge>) -> Result<Self, TntpError> {
        if node_count == 0 {
            return Err(TntpError::MalformedHeader {
                line: 0,
                detail: "network must have at least one node".into(),
            });
        }
        for (i, e) in edges.iter().enumerate() {
            for node in [e.from, e.to] {
                if node == 0 || node > node_count {
                    return Err(TntpError::NodeOutOfRange { line: i + 1, node, node_count });
                }
            }
            if !(e.cost.is_finite() && e.cost >= 0.0) {
                return Err(TntpError::BadCost { line: i + 1, cost: e.cost });
            }
        }
        Ok(Self { node_count, edges })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub(crate) fn adjacency(&self) -> Adjacency {
        Adjacency::new(self)
    }
}

fn parse_number<T: FromStr>(line: usize, field: &'static str, value: &str) -> Result<T, TntpError> {
    value.parse().map_err(|_| TntpError::BadNumber { line, field, value: value.to_string() })
}

/// Parses a TNTP net file, taking edge costs from `column`.
pub fn parse_tntp(text: &str, column: CostColumn) -> Result<Network, TntpError> {
    let mut node_count = None;
    let mut link_count = None;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let mut metadata_closed = false;
    for (line_no, raw) in lines.by_ref() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('~') {
            continue;
        }
        let Some(rest) = line.strip_prefix('<') else {
            return Err(TntpError::MalformedHeader {
                line: line_no,
                detail: format!("expected a <KEY> line, found {line:?}"),
            });
        };
        let Some((key, value)) = rest.split_once('>') else {
            return Err(TntpError::MalformedHeader { line: line_no, detail: "unterminated <KEY>".into() });
        };
        match key.trim().to_ascii_uppercase().as_str() {
            "END OF METADATA" => {
                metadata_closed = true;
                break;
            }
            "NUMBER OF NODES" => node_count = Some(parse_number::<usize>(line_no, "NUMBER OF NODES", value.trim())?),
            "NUMBER OF LINKS" => link_count = Some(parse_number::<usize>(line_no, "NUMBER OF LINKS", value.trim())?),
            _ => {}
        }
    }
    if !metadata_closed {
        return Err(TntpError::MissingMetadata("END OF METADATA"));
    }
    let node_count = node_count.ok_or(TntpError::MissingMetadata("NUMBER OF NODES"))?;
    let link_count = link_count.ok_or(TntpError::MissingMetadata("NUMBER OF LINKS"))?;
    if node_count == 0 {
        return Err(TntpError::MalformedHeader { line: 0, detail: "NUMBER OF NODES must be positive".into() });
    }

    let cost_pos = column.position();
    let needed = cost_pos.max(1) + 1;
    let mut edges = Vec::with_capacity(link_count);
    for (line_no, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('~') {
            continue;
        }
        let body = line.split(';').next().unwrap_or("");
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < needed {
            return Err(TntpError::TooFewColumns { line: line_no, expected: needed, found: fields.len() });
        }
        let from: usize = parse_number(line_no, "init_node", fields[0])?;
        let to: usize = parse_number(line_no, "term_node", fields[1])?;
        for node in [from, to] {
            if node == 0 || node > node_count {
                return Err(TntpError::NodeOutOfRange { line: line_no, node, node_count });
            }
        }
        let cost: f64 = parse_number(line_no, column.field_name(), fields[cost_pos])?;
        if !(cost.is_finite() && cost >= 0.0) {
            return Err(TntpError::BadCost { line: line_no, cost });
        }
        edges.push(Edge { from, to, cost });
    }
    if edges.len() != link_count {
        return Err(TntpError::LinkCountMismatch { expected: link_count, found: edges.len() });
    }
    Ok(Network { node_count, edges })
}

/// Writes `network` as a TNTP net file with the edge cost in the `length`
/// column and every other attribute zeroed.
pub fn write_tntp(network: &Network) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "<NUMBER OF ZONES> {}", network.node_count);
    let _ = writeln!(out, "<NUMBER OF NODES> {}", network.node_count);
    let _ = writeln!(out, "<FIRST THRU NODE> 1");
    let _ = writeln!(out, "<NUMBER OF LINKS> {}", network.edges.len());
    let _ = writeln!(out, "<END OF METADATA>");
    let _ = writeln!(out);
    let _ = writeln!(out, "~\tinit_node\tterm_node\tcapacity\tlength\tfree_flow_time\tb\tpower\tspeed\ttoll\tlink_type\t;");
    for e in &network.edges {
        let _ = writeln!(out, "\t{}\t{}\t0\t{:?}\t0\t0\t0\t0\t0\t0\t;", e.from, e.to, e.cost);
    }
    out
}

/// Compressed forward adjacency, cheapest parallel edge only, no self-loops.
pub(crate) struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    costs: Vec<f64>,
}

impl Adjacency {
    fn new(network: &Network) -> Self {
        let mut arcs: Vec<(usize, usize, f64)> = network
            .edges
            .iter()
            .filter(|e| e.from != e.to)
            .map(|e| (e.from - 1, e.to - 1, e.cost))
            .collect();
        arcs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.total_cmp(&b.2)));
        arcs.dedup_by(|later, earlier| later.0 == earlier.0 && later.1 == earlier.1);

        let n = network.node_count;
        let mut offsets = vec![0usize; n + 1];
        for &(from, _, _) in &arcs {
            offsets[from + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Self {
            offsets,
            targets: arcs.iter().map(|a| a.1).collect(),
            costs: arcs.iter().map(|a| a.2).collect(),
        }
    }

    pub(crate) fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Dijkstra from a zero-based source.
    pub(crate) fn dijkstra(&self, source: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.node_count()];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(HeapEntry { dist: 0.0, node: source });
        while let Some(HeapEntry { dist: d, node }) = heap.pop() {
            if d > dist[node] {
                continue;
            }
            for k in self.offsets[node]..self.offsets[node + 1] {
                let next = self.targets[k];
                let candidate = d + self.costs[k];
                if candidate < dist[next] {
                    dist[next] = candidate;
                    heap.push(HeapEntry { dist: candidate, node: next });
                }
            }
        }
        dist
    }
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, ties by node id
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest-path costs from `source` to every node, indexed by `node - 1`.
/// Unreachable nodes get `f64::INFINITY`.
pub fn shortest_paths_from(network: &Network, source: NodeId) -> Result<Vec<f64>, PathError> {
    if source == 0 || source > network.node_count {
        return Err(PathError::InvalidSource { node: source, node_count: network.node_count });
    }
    Ok(network.adjacency().dijkstra(source - 1))
}
