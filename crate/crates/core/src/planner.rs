//! Three-phase base-station planning.
//!
//! 1. Dimensioning picks the starting cluster count (or the caller supplies
//!    it for plain PAM).
//! 2. The swap search partitions the map; every medoid becomes a base
//!    station.
//! 3. For the load-weighted planner, clusters that need more than one cell
//!    by coverage or capacity are repaired, either by re-clustering the
//!    whole map with one more cluster ([`AdjustmentMethod::Global`]) or by
//!    splitting only the offending clusters in two until every piece fits
//!    ([`AdjustmentMethod::Split`]).
//!
//! A cluster is covered when every member lies within the cell range of its
//! medoid, and served when its summed effective load fits in one cell.

use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

use crate::clustering::{dist, search_from, select_initial_medoids, ClusterError, CostModel, PointSet, SearchOptions};
use crate::dimensioning::{initial_k, CellParams};
use crate::hull::convex_hull;
use crate::map::PlanningMap;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("node id={node_id} carries {load} subscribers, more than one cell's capacity of {capacity}")]
    InfeasibleCapacity { node_id: u64, load: u64, capacity: u64 },
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

/// Phase-III repair strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdjustmentMethod {
    /// Method I: add one cluster and re-cluster the entire map.
    Global,
    /// Method II: split each infeasible cluster in two, recursively.
    Split,
}

impl AdjustmentMethod {
    pub fn number(self) -> u8 {
        match self {
            AdjustmentMethod::Global => 1,
            AdjustmentMethod::Split => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(AdjustmentMethod::Global),
            2 => Some(AdjustmentMethod::Split),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Unweighted swap search with a caller-chosen cluster count.
    Pam { k: usize },
    /// Unweighted swap search with a dimensioned cluster count.
    MPam,
    /// Load-weighted swap search with a dimensioned cluster count and
    /// feasibility repair.
    CwnPam(AdjustmentMethod),
}

impl Algorithm {
    pub fn cost_model(self) -> CostModel {
        match self {
            Algorithm::Pam { .. } | Algorithm::MPam => CostModel::Unweighted,
            Algorithm::CwnPam(_) => CostModel::LoadWeighted,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pam { .. } => "pam",
            Algorithm::MPam => "mpam",
            Algorithm::CwnPam(_) => "cwn-pam",
        }
    }

    pub fn method(self) -> Option<AdjustmentMethod> {
        match self {
            Algorithm::CwnPam(m) => Some(m),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Pam { k } => write!(f, "pam(k={k})"),
            Algorithm::MPam => f.write_str("mpam"),
            Algorithm::CwnPam(m) => write!(f, "cwn-pam(method {})", m.number()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterFeasibility {
    pub medoid_id: u64,
    /// Largest member-to-medoid distance, meters.
    pub max_dist_m: f64,
    pub load_sum: u64,
    pub coverage_ok: bool,
    pub capacity_ok: bool,
    pub cells_needed_coverage: u64,
    pub cells_needed_capacity: u64,
}

impl ClusterFeasibility {
    pub fn feasible(&self) -> bool {
        self.cells_needed_coverage <= 1 && self.cells_needed_capacity <= 1
    }
}

/// Checks one cluster against a single cell. `members` and `medoid` are
/// positions in `map.nodes()`; `members` must contain `medoid`.
pub fn check_cluster(
    map: &PlanningMap,
    members: &[usize],
    medoid: usize,
    params: &CellParams,
) -> ClusterFeasibility {
    let nodes = map.nodes();
    let loads = map.effective_loads();
    let center = [nodes[medoid].x, nodes[medoid].y];
    let max_dist_m = members
        .iter()
        .map(|&i| dist(center, [nodes[i].x, nodes[i].y]))
        .fold(0.0, f64::max);
    let load_sum: u64 = members.iter().map(|&i| loads[i]).sum();
    let range = params.cell_range_m();
    let coverage_ok = max_dist_m <= range;
    let cells_needed_coverage = if coverage_ok {
        1
    } else {
        ((max_dist_m / range).ceil() as u64).max(2)
    };
    let cells_needed_capacity = load_sum.div_ceil(params.subscribers_per_cell()).max(1);
    ClusterFeasibility {
        medoid_id: nodes[medoid].id,
        max_dist_m,
        load_sum,
        coverage_ok,
        capacity_ok: load_sum <= params.subscribers_per_cell(),
        cells_needed_coverage,
        cells_needed_capacity,
    }
}

/// One base station and the nodes it serves.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedCluster {
    /// Position of the medoid in `map.nodes()`.
    pub medoid: usize,
    pub medoid_id: u64,
    /// Base-station coordinates (the medoid's).
    pub bs: [f64; 2],
    /// Positions in `map.nodes()`, ascending.
    pub members: Vec<usize>,
    /// Node ids of the members, ascending.
    pub member_ids: Vec<u64>,
    pub feasibility: ClusterFeasibility,
    /// Convex hull of the member coordinates.
    pub hull: Vec<[f64; 2]>,
}

impl PlannedCluster {
    fn build(map: &PlanningMap, medoid: usize, members: Vec<usize>, params: &CellParams) -> Self {
        let nodes = map.nodes();
        let coords: Vec<[f64; 2]> = members.iter().map(|&i| [nodes[i].x, nodes[i].y]).collect();
        Self {
            medoid,
            medoid_id: nodes[medoid].id,
            bs: [nodes[medoid].x, nodes[medoid].y],
            member_ids: members.iter().map(|&i| nodes[i].id).collect(),
            feasibility: check_cluster(map, &members, medoid, params),
            hull: convex_hull(&coords),
            members,
        }
    }

    pub fn feasible(&self) -> bool {
        self.feasibility.feasible()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    /// Sorted by medoid id.
    pub clusters: Vec<PlannedCluster>,
    pub total_cost: f64,
    pub algorithm: Algorithm,
    pub params: CellParams,
    pub seed: u64,
    pub adjustment_rounds: usize,
}

impl Plan {
    pub fn num_base_stations(&self) -> usize {
        self.clusters.len()
    }

    pub fn feasible(&self) -> bool {
        self.clusters.iter().all(PlannedCluster::feasible)
    }

    pub fn medoid_ids(&self) -> Vec<u64> {
        self.clusters.iter().map(|c| c.medoid_id).collect()
    }

    /// Canonical JSON document (sorted keys, clusters by medoid id).
    pub fn to_json_value(&self) -> Value {
        let clusters: Vec<Value> = self
            .clusters
            .iter()
            .map(|c| {
                json!({
                    "medoid_id": c.medoid_id,
                    "bs_x": c.bs[0],
                    "bs_y": c.bs[1],
                    "members": c.member_ids,
                    "load_sum": c.feasibility.load_sum,
                    "max_dist_m": c.feasibility.max_dist_m,
                    "feasible": c.feasible(),
                    "hull": c.hull,
                })
            })
            .collect();
        let mut doc = json!({
            "algorithm": self.algorithm.name(),
            "seed": self.seed,
            "params": {
                "cell_range_m": self.params.cell_range_m(),
                "subscribers_per_cell": self.params.subscribers_per_cell(),
                "cell_area_m2": self.params.cell_area_m2(),
            },
            "num_base_stations": self.num_base_stations(),
            "total_cost": self.total_cost,
            "adjustment_rounds": self.adjustment_rounds,
            "clusters": clusters,
        });
        if let Some(m) = self.algorithm.method() {
            doc["method"] = json!(m.number());
        }
        doc
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("plan serializes")
    }

    /// One row per cluster; members joined with `;`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["medoid_id", "bs_x", "bs_y", "load_sum", "max_dist_m", "feasible", "members"])
            .expect("in-memory write");
        for c in &self.clusters {
            let members: Vec<String> = c.member_ids.iter().map(u64::to_string).collect();
            w.write_record([
                c.medoid_id.to_string(),
                c.bs[0].to_string(),
                c.bs[1].to_string(),
                c.feasibility.load_sum.to_string(),
                c.feasibility.max_dist_m.to_string(),
                c.feasible().to_string(),
                members.join(";"),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Cost of `clusters` under `model`, summed over nodes in ascending id order.
fn plan_cost(map: &PlanningMap, clusters: &[PlannedCluster], model: CostModel) -> f64 {
    let nodes = map.nodes();
    let loads = map.effective_loads();
    let mut owner = vec![usize::MAX; map.len()];
    for c in clusters {
        for &m in &c.members {
            owner[m] = c.medoid;
        }
    }
    let mut cost = 0.0;
    for (i, &o) in owner.iter().enumerate() {
        let w = match model {
            CostModel::Unweighted => 1.0,
            CostModel::LoadWeighted => loads[i] as f64,
        };
        cost += w * dist([nodes[i].x, nodes[i].y], [nodes[o].x, nodes[o].y]);
    }
    cost
}

/// Seed for a derived sub-search. SplitMix64 finalizer over the inputs.
fn mix_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.rotate_left(32);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Clusters `indices` (positions in `map.nodes()`) into `k` groups and
/// returns them as planned clusters in medoid order.
fn cluster_subset(
    map: &PlanningMap,
    indices: &[usize],
    k: usize,
    seed: u64,
    model: CostModel,
    params: &CellParams,
    options: &SearchOptions,
) -> Result<Vec<PlannedCluster>, ClusterError> {
    let points = PointSet::subset(map, indices);
    let start = select_initial_medoids(points.len(), k, seed)?;
    let clustering = search_from(&points, start, model, options)?;
    Ok(clustering
        .medoids
        .iter()
        .zip(clustering.members())
        .map(|(&m, local)| {
            let members = local.into_iter().map(|i| indices[i]).collect();
            PlannedCluster::build(map, indices[m], members, params)
        })
        .collect())
}

/// Phase II only: one swap search with `k` clusters over the whole map,
/// feasibility reported but not enforced.
pub fn cluster_map(
    map: &PlanningMap,
    params: &CellParams,
    algorithm: Algorithm,
    k: usize,
    seed: u64,
    options: &SearchOptions,
) -> Result<Plan, PlanError> {
    let all: Vec<usize> = (0..map.len()).collect();
    let model = algorithm.cost_model();
    let clusters = cluster_subset(map, &all, k, seed, model, params, options)?;
    Ok(Plan {
        total_cost: plan_cost(map, &clusters, model),
        clusters,
        algorithm,
        params: *params,
        seed,
        adjustment_rounds: 0,
    })
}

/// Fails on the lowest-id node whose own load exceeds one cell.
fn check_node_capacity(map: &PlanningMap, params: &CellParams) -> Result<(), PlanError> {
    let capacity = params.subscribers_per_cell();
    match map
        .effective_loads()
        .iter()
        .zip(map.nodes())
        .find(|(&l, _)| l > capacity)
    {
        Some((&load, node)) => Err(PlanError::InfeasibleCapacity {
            node_id: node.id,
            load,
            capacity,
        }),
        None => Ok(()),
    }
}

fn first_overloaded(map: &PlanningMap, plan: &Plan) -> PlanError {
    let capacity = plan.params.subscribers_per_cell();
    let loads = map.effective_loads();
    plan.clusters
        .iter()
        .flat_map(|c| c.members.iter())
        .find(|&&i| loads[i] > capacity)
        .map(|&i| PlanError::InfeasibleCapacity {
            node_id: map.nodes()[i].id,
            load: loads[i],
            capacity,
        })
        .unwrap_or(PlanError::InfeasibleCapacity {
            node_id: plan.clusters.first().map_or(0, |c| c.medoid_id),
            load: 0,
            capacity,
        })
}

/// Method I. Clusters the whole map with `k_current` clusters and, while
/// any cluster is infeasible, retries with one more cluster. Round `r`
/// seeds its initialization with `seed ^ r`.
pub fn adjust_method_i(
    map: &PlanningMap,
    params: &CellParams,
    seed: u64,
    k_current: usize,
) -> Result<Plan, PlanError> {
    adjust_method_i_with(map, params, seed, k_current, &SearchOptions::default())
}

pub fn adjust_method_i_with(
    map: &PlanningMap,
    params: &CellParams,
    seed: u64,
    k_current: usize,
    options: &SearchOptions,
) -> Result<Plan, PlanError> {
    let algorithm = Algorithm::CwnPam(AdjustmentMethod::Global);
    let mut k = k_current;
    let mut round = 0usize;
    loop {
        let mut plan = cluster_map(map, params, algorithm, k, seed ^ round as u64, options)?;
        plan.seed = seed;
        plan.adjustment_rounds = round;
        if plan.feasible() {
            return Ok(plan);
        }
        if k >= map.len() {
            return Err(first_overloaded(map, &plan));
        }
        k += 1;
        round += 1;
    }
}

/// Method II. Every infeasible cluster, in ascending medoid id order, is
/// re-clustered on its own members with two load-weighted clusters; pieces
/// that are still infeasible are split again. Feasible clusters are kept
/// as they are.
pub fn adjust_method_ii(
    map: &PlanningMap,
    params: &CellParams,
    seed: u64,
    plan: Plan,
) -> Result<Plan, PlanError> {
    adjust_method_ii_with(map, params, seed, plan, &SearchOptions::default())
}

pub fn adjust_method_ii_with(
    map: &PlanningMap,
    params: &CellParams,
    seed: u64,
    plan: Plan,
    options: &SearchOptions,
) -> Result<Plan, PlanError> {
    let mut splits = 0usize;
    let mut out = Vec::with_capacity(plan.clusters.len());
    let mut input = plan.clusters;
    input.sort_by_key(|c| c.medoid_id);
    for cluster in input {
        if cluster.feasible() {
            out.push(cluster);
        } else {
            split_until_feasible(map, params, seed, cluster, 0, options, &mut out, &mut splits)?;
        }
    }
    out.sort_by_key(|c| c.medoid_id);
    let algorithm = Algorithm::CwnPam(AdjustmentMethod::Split);
    Ok(Plan {
        total_cost: plan_cost(map, &out, algorithm.cost_model()),
        clusters: out,
        algorithm,
        params: *params,
        seed,
        adjustment_rounds: plan.adjustment_rounds + splits,
    })
}

#[allow(clippy::too_many_arguments)]
fn split_until_feasible(
    map: &PlanningMap,
    params: &CellParams,
    seed: u64,
    cluster: PlannedCluster,
    depth: u64,
    options: &SearchOptions,
    out: &mut Vec<PlannedCluster>,
    splits: &mut usize,
) -> Result<(), PlanError> {
    if cluster.members.len() < 2 {
        let i = cluster.medoid;
        return Err(PlanError::InfeasibleCapacity {
            node_id: cluster.medoid_id,
            load: map.effective_loads()[i],
            capacity: params.subscribers_per_cell(),
        });
    }
    let sub_seed = mix_seed(seed, cluster.medoid_id, depth);
    let halves = cluster_subset(
        map,
        &cluster.members,
        2,
        sub_seed,
        CostModel::LoadWeighted,
        params,
        options,
    )?;
    *splits += 1;
    for half in halves {
        if half.feasible() {
            out.push(half);
        } else {
            split_until_feasible(map, params, seed, half, depth + 1, options, out, splits)?;
        }
    }
    Ok(())
}

/// Runs the full planner for `algorithm`.
pub fn plan(
    map: &PlanningMap,
    params: &CellParams,
    algorithm: Algorithm,
    seed: u64,
) -> Result<Plan, PlanError> {
    plan_with(map, params, algorithm, seed, &SearchOptions::default())
}

pub fn plan_with(
    map: &PlanningMap,
    params: &CellParams,
    algorithm: Algorithm,
    seed: u64,
    options: &SearchOptions,
) -> Result<Plan, PlanError> {
    let dimensioned = initial_k(map, params).initial_k as usize;
    match algorithm {
        Algorithm::Pam { k } => cluster_map(map, params, algorithm, k, seed, options),
        Algorithm::MPam => cluster_map(map, params, algorithm, dimensioned, seed, options),
        Algorithm::CwnPam(method) => {
            check_node_capacity(map, params)?;
            match method {
                AdjustmentMethod::Global => adjust_method_i_with(map, params, seed, dimensioned, options),
                AdjustmentMethod::Split => {
                    let raw = cluster_map(map, params, algorithm, dimensioned, seed, options)?;
                    adjust_method_ii_with(map, params, seed, raw, options)
                }
            }
        }
    }
}
