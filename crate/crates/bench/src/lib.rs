//! Instance builders shared by the benchmarks.

use cellplan_core::{generate_map, DensityMode, PlanningMap, PointSet, SyntheticSpec};

/// Homogeneous synthetic map with `n` nodes at a fixed density of
/// roughly 2,300 m² and 60 subscribers per node.
pub fn homogeneous_map(n: usize, seed: u64) -> PlanningMap {
    generate_map(&SyntheticSpec {
        node_count: n,
        total_subscribers: 60 * n as u64,
        area_m2: 2_300.0 * n as f64,
        density: DensityMode::Homogeneous,
        seed,
    })
    .expect("valid synthetic spec")
}

pub fn homogeneous_points(n: usize, seed: u64) -> PointSet {
    PointSet::from_map(&homogeneous_map(n, seed))
}
