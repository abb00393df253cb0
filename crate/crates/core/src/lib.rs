//! Shipment rerouting toolkit.
//!
//! Trucks of various capacities and rental fees must carry a set of
//! indivisible shipments between hubs of a road network. Each shipment is
//! loaded at its source hub and unloaded at its destination hub by the same
//! truck. The goal is to minimise rental fees plus a per-distance cost for the
//! travelled routes, optionally with every used truck starting and ending at a
//! dispatch hub.
//!
//! The crate is organised in the order data flows through it:
//!
//! - [`network`]: TNTP network parsing and single-source shortest paths.
//! - [`hub_graph`]: the all-pairs metric closure over hubs.
//! - [`instance`] and [`plan`]: problem instances, route plans, feasibility
//!   checking and the objective, independent of any formulation.
//! - [`milp`]: the mixed-integer linear formulation and LP-file export.
//! - [`exact`]: branch-and-bound producing certified optima for small instances.
//! - [`cqm`] and [`qubo`]: the constrained quadratic formulation and its
//!   penalty compilation to an unconstrained binary model.
//! - [`anneal`]: simulated annealing over QUBOs and sample decoding.

pub mod anneal;
pub mod cqm;
pub mod exact;
pub mod expr;
pub mod hub_graph;
pub mod instance;
pub mod milp;
pub mod network;
pub mod plan;
pub mod qubo;
pub mod var_index;

pub use anneal::{anneal, decode_sample, AnnealSchedule, Sample, SampleSet};
pub use cqm::{build_cqm, CqmModel};
pub use exact::{solve_exact, solve_exact_with, ExactOptions, ExactSolution, SearchNode};
pub use hub_graph::{build_hub_graph, CsvPrecision, HubGraph};
pub use instance::{generate_requests, GenerationSpec, SrpInstance, TransportRequest, TruckSpec};
pub use milp::{build_milp, emit_lp, ModelIR, ModelStats};
pub use network::{parse_tntp, shortest_paths_from, CostColumn, Network};
pub use plan::{evaluate_objective, validate_plan, Action, FeasibilityReport, RoutePlan, Stop};
pub use qubo::{default_penalties, to_penalty_qubo, Penalties, QuboModel};
pub use var_index::{ConstraintLabel, VarIndex, VarKey};

/// Node identifier as used in network files: 1-based.
pub type NodeId = usize;
