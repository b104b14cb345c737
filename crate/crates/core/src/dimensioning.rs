//! Coverage- and capacity-driven cell counts.
//!
//! Cells are idealized as regular hexagons whose circumradius is the cell
//! range. Both counts round up and never drop below one cell.

use thiserror::Error;

use crate::map::PlanningMap;

/// Area factor of a regular hexagon with unit circumradius, `3·√3/2`.
pub const HEXAGON_AREA_FACTOR: f64 = 2.598_076_211_353_316;

#[derive(Debug, Error, PartialEq)]
pub enum DimensionError {
    #[error("cell range must be positive and finite, got {0} m")]
    NonPositiveRange(f64),
    #[error("subscribers per cell must be at least 1")]
    ZeroCapacity,
}

/// Radio parameters shared by every cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellParams {
    cell_range_m: f64,
    subscribers_per_cell: u64,
    cell_area_m2: f64,
}

impl CellParams {
    pub fn new(cell_range_m: f64, subscribers_per_cell: u64) -> Result<Self, DimensionError> {
        let cell_area_m2 = cell_area(cell_range_m)?;
        if subscribers_per_cell == 0 {
            return Err(DimensionError::ZeroCapacity);
        }
        Ok(Self {
            cell_range_m,
            subscribers_per_cell,
            cell_area_m2,
        })
    }

    pub fn cell_range_m(&self) -> f64 {
        self.cell_range_m
    }

    pub fn subscribers_per_cell(&self) -> u64 {
        self.subscribers_per_cell
    }

    pub fn cell_area_m2(&self) -> f64 {
        self.cell_area_m2
    }
}

/// The two dimensioning counts and the cluster count they imply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellCounts {
    pub by_coverage: u64,
    pub by_capacity: u64,
    pub initial_k: u64,
}

/// Area of a hexagonal cell with circumradius `cell_range_m`.
pub fn cell_area(cell_range_m: f64) -> Result<f64, DimensionError> {
    if !cell_range_m.is_finite() || cell_range_m <= 0.0 {
        return Err(DimensionError::NonPositiveRange(cell_range_m));
    }
    Ok(HEXAGON_AREA_FACTOR * cell_range_m * cell_range_m)
}

/// Smallest `count ≥ 1` with `count · cell_area ≥ total_area`.
pub fn coverage_cell_count(total_area_m2: f64, params: &CellParams) -> u64 {
    let cell = params.cell_area_m2;
    if total_area_m2.is_nan() || total_area_m2 <= 0.0 {
        return 1;
    }
    let mut count = ((total_area_m2 / cell).ceil() as u64).max(1);
    // The quotient may round across an integer; settle on the product form.
    while (count as f64) * cell < total_area_m2 {
        count += 1;
    }
    while count > 1 && ((count - 1) as f64) * cell >= total_area_m2 {
        count -= 1;
    }
    count
}

/// `ceil(subscribers / subscribers_per_cell)`, at least 1.
pub fn capacity_cell_count(total_subscribers: u64, params: &CellParams) -> u64 {
    total_subscribers
        .div_ceil(params.subscribers_per_cell)
        .max(1)
}

/// Initial cluster count for a whole map: the larger of the two counts,
/// clamped to the number of nodes.
pub fn initial_k(map: &PlanningMap, params: &CellParams) -> CellCounts {
    let by_coverage = coverage_cell_count(map.area_m2(), params);
    let by_capacity = capacity_cell_count(map.total_load(), params);
    CellCounts {
        by_coverage,
        by_capacity,
        initial_k: by_coverage.max(by_capacity).min(map.len() as u64),
    }
}
