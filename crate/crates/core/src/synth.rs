//! Synthetic planning maps with prescribed node count, area and total load.
//!
//! Nodes are scattered uniformly over a square of the requested area.
//! Per-node loads are drawn, rescaled to the requested total and rounded
//! with the largest-remainder rule so the total is hit exactly. The
//! heterogeneous mode additionally puts a fixed share of the load on a
//! compact group of hotspot nodes (those nearest a random centre).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::map::{NodeRecord, PlanningMap};

/// Fraction of subscribers placed on hotspot nodes by default.
pub const DEFAULT_HOTSPOT_SHARE: f64 = 0.6;
/// Fraction of nodes that are hotspots by default.
pub const DEFAULT_HOTSPOT_FRACTION: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("node count must be at least 1")]
    NoNodes,
    #[error("area must be positive and finite, got {0}")]
    BadArea(f64),
    #[error("hotspot share must lie strictly between 0 and 1, got {0}")]
    BadShare(f64),
    #[error("hotspot count {count} must lie in 1..{nodes}")]
    BadHotspotCount { count: usize, nodes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityMode {
    Homogeneous,
    Heterogeneous { hotspot_count: usize, hotspot_share: f64 },
}

impl DensityMode {
    /// 60 % of the load on 10 % of the nodes (at least one).
    pub fn default_heterogeneous(node_count: usize) -> Self {
        DensityMode::Heterogeneous {
            hotspot_count: ((node_count as f64 * DEFAULT_HOTSPOT_FRACTION).round() as usize).max(1),
            hotspot_share: DEFAULT_HOTSPOT_SHARE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub node_count: usize,
    pub total_subscribers: u64,
    pub area_m2: f64,
    pub density: DensityMode,
    pub seed: u64,
}

/// Integer apportionment of `total` proportional to `targets` (which should
/// already sum to `total`): floors first, leftover units to the largest
/// fractional parts, ties to the lower index.
fn largest_remainder(targets: &[f64], total: u64) -> Vec<u64> {
    let mut out: Vec<u64> = targets.iter().map(|t| t.floor().max(0.0) as u64).collect();
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = targets[a] - targets[a].floor();
        let fb = targets[b] - targets[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut assigned: u64 = out.iter().sum();
    let mut cursor = 0;
    while assigned < total {
        out[order[cursor % order.len()]] += 1;
        assigned += 1;
        cursor += 1;
    }
    // only reachable through float error in `targets`
    let mut cursor = order.len();
    while assigned > total {
        cursor = if cursor == 0 { order.len() - 1 } else { cursor - 1 };
        let i = order[cursor];
        if out[i] > 0 {
            out[i] -= 1;
            assigned -= 1;
        }
    }
    out
}

pub fn generate_map(spec: &SyntheticSpec) -> Result<PlanningMap, SynthError> {
    let n = spec.node_count;
    if n == 0 {
        return Err(SynthError::NoNodes);
    }
    if !spec.area_m2.is_finite() || spec.area_m2 <= 0.0 {
        return Err(SynthError::BadArea(spec.area_m2));
    }
    if let DensityMode::Heterogeneous {
        hotspot_count,
        hotspot_share,
    } = spec.density
    {
        if !(hotspot_share > 0.0 && hotspot_share < 1.0) {
            return Err(SynthError::BadShare(hotspot_share));
        }
        if hotspot_count == 0 || hotspot_count >= n {
            return Err(SynthError::BadHotspotCount {
                count: hotspot_count,
                nodes: n,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let side = spec.area_m2.sqrt();
    let cm = |v: f64| (v * 100.0).round() / 100.0;
    let coords: Vec<[f64; 2]> = (0..n)
        .map(|_| [cm(rng.random_range(0.0..side)), cm(rng.random_range(0.0..side))])
        .collect();
    let draws: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();

    let total = spec.total_subscribers as f64;
    let targets: Vec<f64> = match spec.density {
        DensityMode::Homogeneous => {
            let sum: f64 = draws.iter().sum();
            draws.iter().map(|w| total * w / sum).collect()
        }
        DensityMode::Heterogeneous {
            hotspot_count,
            hotspot_share,
        } => {
            let centre = [rng.random_range(0.0..side), rng.random_range(0.0..side)];
            let mut by_dist: Vec<usize> = (0..n).collect();
            by_dist.sort_by(|&a, &b| {
                let da = crate::clustering::dist(coords[a], centre);
                let db = crate::clustering::dist(coords[b], centre);
                da.total_cmp(&db).then(a.cmp(&b))
            });
            let mut hot = vec![false; n];
            for &i in &by_dist[..hotspot_count] {
                hot[i] = true;
            }
            let hot_sum: f64 = (0..n).filter(|&i| hot[i]).map(|i| draws[i]).sum();
            let cold_sum: f64 = (0..n).filter(|&i| !hot[i]).map(|i| draws[i]).sum();
            (0..n)
                .map(|i| {
                    if hot[i] {
                        total * hotspot_share * draws[i] / hot_sum
                    } else {
                        total * (1.0 - hotspot_share) * draws[i] / cold_sum
                    }
                })
                .collect()
        }
    };
    let loads = largest_remainder(&targets, spec.total_subscribers);

    let nodes = coords
        .iter()
        .zip(loads)
        .enumerate()
        .map(|(i, (c, load))| NodeRecord::new(i as u64, c[0], c[1], load))
        .collect();
    Ok(PlanningMap::new(spec.area_m2, nodes, vec![]).expect("generated map is valid"))
}
