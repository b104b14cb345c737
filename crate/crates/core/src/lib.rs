//! Base-station planning by load-weighted k-medoids clustering.
//!
//! A [`PlanningMap`] of intersection nodes with subscriber loads is
//! dimensioned into an initial cluster count, partitioned by a
//! partitioning-around-medoids swap search, and (for the load-weighted
//! planner) repaired until every cluster fits in a single cell. Each
//! cluster's medoid is a base-station site.
//!
//! ```
//! use cellplan_core::{parse_map, plan, Algorithm, AdjustmentMethod, CellParams};
//!
//! let map = parse_map(br#"{"area_m2": 40000, "nodes": [
//!     {"id": 0, "x": 0, "y": 0, "load": 300},
//!     {"id": 1, "x": 50, "y": 0, "load": 200},
//!     {"id": 2, "x": 180, "y": 10, "load": 400}]}"#).unwrap();
//! let params = CellParams::new(100.0, 600).unwrap();
//! let plan = plan(&map, &params, Algorithm::CwnPam(AdjustmentMethod::Split), 7).unwrap();
//! assert!(plan.feasible());
//! assert_eq!(plan.num_base_stations(), 2);
//! ```

pub mod clustering;
pub mod dimensioning;
pub mod experiment;
pub mod hull;
pub mod map;
pub mod planner;
pub mod synth;

pub use clustering::{
    assign, best_swap, euclidean_dist, run_swap_search, run_swap_search_with, search_from,
    select_initial_medoids, ClusterError, Clustering, CostModel, PointSet, SearchOptions,
    SwapCandidate,
};
pub use dimensioning::{
    capacity_cell_count, cell_area, coverage_cell_count, initial_k, CellCounts, CellParams,
    DimensionError,
};
pub use experiment::{
    compare_methods, emit_csv, parse_csv, render_comparison, rows_to_csv, run_experiment,
    run_matrix, AlgorithmSpec, Dataset, ExperimentConfig, ExperimentError, ExperimentRow,
    MethodComparison,
};
pub use map::{
    distribute_street_loads, emit_map, parse_map, total_load, MapError, NodeRecord, PlanningMap,
    StreetRecord,
};
pub use planner::{
    adjust_method_i, adjust_method_ii, check_cluster, cluster_map, plan, plan_with,
    AdjustmentMethod, Algorithm, ClusterFeasibility, Plan, PlanError, PlannedCluster,
};
pub use synth::{generate_map, DensityMode, SynthError, SyntheticSpec};
