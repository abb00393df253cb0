//! Problem instances and seeded request generation.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hub_graph::HubGraph;
use crate::NodeId;

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("{what} refers to hub {hub}, which is not in the hub graph")]
    UnknownHub { what: String, hub: NodeId },
    #[error("request {0} has the same source and destination")]
    SameEndpoints(usize),
    #[error("request {0} has a non-positive or non-finite load")]
    BadLoad(usize),
    #[error("truck {0} needs a positive capacity and a nonnegative fee")]
    BadTruck(usize),
    #[error("unit distance cost must be positive and finite")]
    BadUnitCost,
    #[error("no truck order has both capacities and fees nondecreasing")]
    TrucksNotOrderable,
    #[error("request load {load} exceeds the largest truck capacity {capacity}")]
    Unservable { load: f64, capacity: f64 },
    #[error("need at least 2 hubs to draw requests")]
    TooFewHubs,
    #[error("{m} requests requested but only {available} distinct ordered hub pairs exist")]
    NotEnoughPairs { m: usize, available: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportRequest {
    pub source_hub: NodeId,
    pub dest_hub: NodeId,
    pub load: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruckSpec {
    pub capacity: f64,
    pub rental_fee: f64,
}

/// A validated instance. Trucks are stored sorted by capacity, and fees are
/// nondecreasing in that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceDoc", into = "InstanceDoc")]
pub struct SrpInstance {
    hub_graph: HubGraph,
    requests: Vec<TransportRequest>,
    trucks: Vec<TruckSpec>,
    unit_distance_cost: f64,
    dispatch_hub: Option<NodeId>,
    seed: Option<u64>,
    // hub positions of (source, dest) per request
    endpoints: Vec<(usize, usize)>,
    dispatch_idx: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    hub_graph: HubGraph,
    requests: Vec<TransportRequest>,
    trucks: Vec<TruckSpec>,
    unit_distance_cost: f64,
    #[serde(default)]
    dispatch_hub: Option<NodeId>,
    #[serde(default)]
    seed: Option<u64>,
}

impl TryFrom<InstanceDoc> for SrpInstance {
    type Error = InstanceError;
    fn try_from(d: InstanceDoc) -> Result<Self, Self::Error> {
        let mut inst = SrpInstance::new(d.hub_graph, d.requests, d.trucks, d.unit_distance_cost, d.dispatch_hub)?;
        inst.seed = d.seed;
        Ok(inst)
    }
}

impl From<SrpInstance> for InstanceDoc {
    fn from(i: SrpInstance) -> Self {
        InstanceDoc {
            hub_graph: i.hub_graph,
            requests: i.requests,
            trucks: i.trucks,
            unit_distance_cost: i.unit_distance_cost,
            dispatch_hub: i.dispatch_hub,
            seed: i.seed,
        }
    }
}

impl SrpInstance {
    pub fn new(
        hub_graph: HubGraph,
        requests: Vec<TransportRequest>,
        mut trucks: Vec<TruckSpec>,
        unit_distance_cost: f64,
        dispatch_hub: Option<NodeId>,
    ) -> Result<Self, InstanceError> {
        if !(unit_distance_cost.is_finite() && unit_distance_cost > 0.0) {
            return Err(InstanceError::BadUnitCost);
        }
        let mut endpoints = Vec::with_capacity(requests.len());
        for (i, r) in requests.iter().enumerate() {
            let lookup = |hub| {
                hub_graph.index_of(hub).ok_or(InstanceError::UnknownHub { what: format!("request {i}"), hub })
            };
            let s = lookup(r.source_hub)?;
            let t = lookup(r.dest_hub)?;
            if s == t {
                return Err(InstanceError::SameEndpoints(i));
            }
            if !(r.load.is_finite() && r.load > 0.0) {
                return Err(InstanceError::BadLoad(i));
            }
            endpoints.push((s, t));
        }
        for (j, t) in trucks.iter().enumerate() {
            let ok_cap = t.capacity.is_finite() && t.capacity > 0.0;
            let ok_fee = t.rental_fee.is_finite() && t.rental_fee >= 0.0;
            if !(ok_cap && ok_fee) {
                return Err(InstanceError::BadTruck(j));
            }
        }
        trucks.sort_by(|a, b| a.capacity.total_cmp(&b.capacity).then(a.rental_fee.total_cmp(&b.rental_fee)));
        if trucks.windows(2).any(|w| w[1].rental_fee < w[0].rental_fee) {
            return Err(InstanceError::TrucksNotOrderable);
        }
        let max_load = requests.iter().map(|r| r.load).fold(0.0, f64::max);
        let max_cap = trucks.last().map_or(0.0, |t| t.capacity);
        if !requests.is_empty() && max_load > max_cap {
            return Err(InstanceError::Unservable { load: max_load, capacity: max_cap });
        }
        let dispatch_idx = match dispatch_hub {
            Some(hub) => Some(
                hub_graph.index_of(hub).ok_or(InstanceError::UnknownHub { what: "dispatch hub".into(), hub })?,
            ),
            None => None,
        };
        Ok(Self { hub_graph, requests, trucks, unit_distance_cost, dispatch_hub, seed: None, endpoints, dispatch_idx })
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn hub_graph(&self) -> &HubGraph {
        &self.hub_graph
    }

    pub fn requests(&self) -> &[TransportRequest] {
        &self.requests
    }

    pub fn trucks(&self) -> &[TruckSpec] {
        &self.trucks
    }

    /// Number of requests.
    pub fn m(&self) -> usize {
        self.requests.len()
    }

    /// Number of trucks.
    pub fn k(&self) -> usize {
        self.trucks.len()
    }

    pub fn unit_distance_cost(&self) -> f64 {
        self.unit_distance_cost
    }

    pub fn dispatch_hub(&self) -> Option<NodeId> {
        self.dispatch_hub
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Hub positions of request `i`'s source and destination.
    #[inline]
    pub fn endpoints(&self, i: usize) -> (usize, usize) {
        self.endpoints[i]
    }

    pub fn dispatch_index(&self) -> Option<usize> {
        self.dispatch_idx
    }

    /// Distance between hub positions.
    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        self.hub_graph.dist(a, b)
    }

    /// Trucks `a` and `b` are interchangeable.
    pub fn same_class(&self, a: usize, b: usize) -> bool {
        self.trucks[a] == self.trucks[b]
    }
}

/// Draws `m` requests with pairwise distinct ordered `(source, dest)` pairs.
pub fn generate_requests(
    hub_graph: &HubGraph,
    m: usize,
    load: f64,
    rng_seed: u64,
) -> Result<Vec<TransportRequest>, InstanceError> {
    let n = hub_graph.len();
    if n < 2 {
        return Err(InstanceError::TooFewHubs);
    }
    if !(load.is_finite() && load > 0.0) {
        return Err(InstanceError::BadLoad(0));
    }
    let available = n * (n - 1);
    if m > available {
        return Err(InstanceError::NotEnoughPairs { m, available });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let hubs = hub_graph.hubs();
    Ok(index::sample(&mut rng, available, m)
        .into_iter()
        .map(|k| {
            let s = k / (n - 1);
            let t = k % (n - 1);
            let t = if t >= s { t + 1 } else { t };
            TransportRequest { source_hub: hubs[s], dest_hub: hubs[t], load }
        })
        .collect())
}

/// Parameters for a generated experiment instance. Defaults: load 50,
/// capacity 100, fee 1, unit cost 1, `K = m`, dispatch at node 1 (or the
/// first hub if node 1 is not a hub).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSpec {
    pub m: usize,
    pub k: Option<usize>,
    pub load: f64,
    pub capacity: f64,
    pub rental_fee: f64,
    pub unit_distance_cost: f64,
    pub dispatch_hub: Option<NodeId>,
    pub seed: u64,
}

impl GenerationSpec {
    pub fn new(m: usize, seed: u64) -> Self {
        Self {
            m,
            k: None,
            load: 50.0,
            capacity: 100.0,
            rental_fee: 1.0,
            unit_distance_cost: 1.0,
            dispatch_hub: None,
            seed,
        }
    }

    pub fn build(&self, hub_graph: &HubGraph) -> Result<SrpInstance, InstanceError> {
        let requests = generate_requests(hub_graph, self.m, self.load, self.seed)?;
        let k = self.k.unwrap_or(self.m);
        let trucks = vec![TruckSpec { capacity: self.capacity, rental_fee: self.rental_fee }; k];
        let dispatch = self
            .dispatch_hub
            .unwrap_or_else(|| if hub_graph.index_of(1).is_some() { 1 } else { hub_graph.hubs()[0] });
        Ok(SrpInstance::new(hub_graph.clone(), requests, trucks, self.unit_distance_cost, Some(dispatch))?
            .with_seed(Some(self.seed)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> HubGraph {
        let rows =
            (0..n).map(|a| (0..n).map(|b| (a as f64 - b as f64).abs()).collect()).collect();
        HubGraph::from_matrix((1..=n).collect(), rows).unwrap()
    }

    #[test]
    fn generation_is_seeded_and_distinct() {
        let g = line(24);
        let a = generate_requests(&g, 5, 50.0, 7).unwrap();
        assert_eq!(a, generate_requests(&g, 5, 50.0, 7).unwrap());
        assert_eq!(a.len(), 5);
        assert!(a.iter().all(|r| r.load == 50.0 && r.source_hub != r.dest_hub));
        let mut pairs: Vec<_> = a.iter().map(|r| (r.source_hub, r.dest_hub)).collect();
        pairs.sort();
        pairs.dedup();
        assert_eq!(pairs.len(), 5);
    }

    #[test]
    fn two_hubs() {
        let g = line(2);
        let r = generate_requests(&g, 1, 1.0, 0).unwrap();
        assert!(matches!((r[0].source_hub, r[0].dest_hub), (1, 2) | (2, 1)));
        assert_eq!(generate_requests(&g, 2, 1.0, 0).unwrap().len(), 2);
        assert_eq!(generate_requests(&g, 3, 1.0, 0), Err(InstanceError::NotEnoughPairs { m: 3, available: 2 }));
        assert_eq!(generate_requests(&line(1), 1, 1.0, 0), Err(InstanceError::TooFewHubs));
    }

    #[test]
    fn trucks_are_normalized() {
        let trucks = vec![
            TruckSpec { capacity: 200.0, rental_fee: 3.0 },
            TruckSpec { capacity: 100.0, rental_fee: 1.0 },
        ];
        let inst = SrpInstance::new(line(3), vec![], trucks, 1.0, None).unwrap();
        assert_eq!(inst.trucks()[0].capacity, 100.0);

        let crossed = vec![
            TruckSpec { capacity: 200.0, rental_fee: 1.0 },
            TruckSpec { capacity: 100.0, rental_fee: 3.0 },
        ];
        assert_eq!(SrpInstance::new(line(3), vec![], crossed, 1.0, None), Err(InstanceError::TrucksNotOrderable));
    }

    #[test]
    fn rejects_bad_requests() {
        let trucks = vec![TruckSpec { capacity: 100.0, rental_fee: 1.0 }];
        let req = |s, t, load| TransportRequest { source_hub: s, dest_hub: t, load };
        let mk = |r| SrpInstance::new(line(3), vec![r], trucks.clone(), 1.0, None);
        assert_eq!(mk(req(1, 1, 10.0)), Err(InstanceError::SameEndpoints(0)));
        assert_eq!(mk(req(1, 9, 10.0)), Err(InstanceError::UnknownHub { what: "request 0".into(), hub: 9 }));
        assert_eq!(mk(req(1, 2, 0.0)), Err(InstanceError::BadLoad(0)));
        assert_eq!(mk(req(1, 2, 150.0)), Err(InstanceError::Unservable { load: 150.0, capacity: 100.0 }));
        assert!(matches!(
            SrpInstance::new(line(3), vec![], trucks.clone(), 1.0, Some(5)),
            Err(InstanceError::UnknownHub { hub: 5, .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let inst = GenerationSpec::new(3, 11).build(&line(5)).unwrap();
        let text = serde_json::to_string_pretty(&inst).unwrap();
        let back: SrpInstance = serde_json::from_str(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.seed(), Some(11));
        assert_eq!(back.dispatch_hub(), Some(1));
    }
}
