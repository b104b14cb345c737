//! Partitioning-around-medoids swap search.
//!
//! Every iteration evaluates all (medoid, non-medoid) exchanges and applies
//! the one with the lowest resulting cost, stopping once no exchange lowers
//! the cost. The cost is either the plain sum of member-to-medoid distances
//! or the same sum with each term weighted by the member's subscriber load.
//!
//! Points are addressed by their position in a [`PointSet`], which is
//! ordered by ascending node id, so "lowest index" and "lowest id" coincide
//! for every tie rule below.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::map::{NodeRecord, PlanningMap};

/// Default point count above which distances are computed on demand
/// instead of from a precomputed matrix.
pub const DEFAULT_MATRIX_THRESHOLD: usize = 2_000;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("k={k} out of range for {n} points")]
    KOutOfRange { k: usize, n: usize },
    #[error("swap search did not converge within {cap} swaps")]
    NonConvergence { cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostModel {
    /// Sum of member-to-medoid distances.
    Unweighted,
    /// Sum of member-to-medoid distances times member load.
    LoadWeighted,
}

/// Straight-line distance between two map nodes.
pub fn euclidean_dist(a: &NodeRecord, b: &NodeRecord) -> f64 {
    dist([a.x, a.y], [b.x, b.y])
}

#[inline]
pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// Coordinates and loads of the points being clustered, ordered by id.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    ids: Vec<u64>,
    coords: Vec<[f64; 2]>,
    loads: Vec<u64>,
}

impl PointSet {
    /// Builds a point set from parallel vectors. Panics unless `ids` is
    /// strictly ascending and all three have the same length.
    pub fn new(ids: Vec<u64>, coords: Vec<[f64; 2]>, loads: Vec<u64>) -> Self {
        assert_eq!(ids.len(), coords.len());
        assert_eq!(ids.len(), loads.len());
        assert!(ids.windows(2).all(|w| w[0] < w[1]), "ids must ascend");
        Self { ids, coords, loads }
    }

    /// All nodes of the map with their effective loads.
    pub fn from_map(map: &PlanningMap) -> Self {
        let all: Vec<usize> = (0..map.len()).collect();
        Self::subset(map, &all)
    }

    /// The nodes at `indices` (positions in `map.nodes()`, ascending).
    pub fn subset(map: &PlanningMap, indices: &[usize]) -> Self {
        let nodes = map.nodes();
        let loads = map.effective_loads();
        Self::new(
            indices.iter().map(|&i| nodes[i].id).collect(),
            indices.iter().map(|&i| [nodes[i].x, nodes[i].y]).collect(),
            indices.iter().map(|&i| loads[i]).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn loads(&self) -> &[u64] {
        &self.loads
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        dist(self.coords[i], self.coords[j])
    }

    /// Per-point cost multiplier under `model`.
    pub fn weight(&self, i: usize, model: CostModel) -> f64 {
        match model {
            CostModel::Unweighted => 1.0,
            CostModel::LoadWeighted => self.loads[i] as f64,
        }
    }
}

/// Tuning knobs for [`run_swap_search_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Maximum number of applied swaps; `None` means `10 · n · k`.
    pub max_swaps: Option<usize>,
    /// Point count above which the distance matrix is not materialized.
    pub matrix_threshold: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            max_swaps: None,
            matrix_threshold: DEFAULT_MATRIX_THRESHOLD,
        }
    }
}

/// Result of a swap search. Medoids and assignment targets are indices
/// into the [`PointSet`] that was clustered.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Ascending.
    pub medoids: Vec<usize>,
    /// `assignment[i]` is the medoid index serving point `i`.
    pub assignment: Vec<usize>,
    pub cost: f64,
    /// Number of swaps applied.
    pub iterations: usize,
    /// Cost after initialization followed by the cost after each swap.
    pub trace: Vec<f64>,
}

impl Clustering {
    pub fn medoid_ids(&self, points: &PointSet) -> Vec<u64> {
        self.medoids.iter().map(|&m| points.ids[m]).collect()
    }

    /// Members of each medoid's cluster, in medoid order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        self.medoids
            .iter()
            .map(|&m| {
                self.assignment
                    .iter()
                    .enumerate()
                    .filter(|&(_, &a)| a == m)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapCandidate {
    pub medoid_out: usize,
    pub candidate_in: usize,
    pub resulting_cost: f64,
}

enum Distances<'a> {
    Matrix { n: usize, d: Vec<f64> },
    OnDemand(&'a [[f64; 2]]),
}

impl<'a> Distances<'a> {
    fn build(points: &'a PointSet, threshold: usize) -> Self {
        let n = points.len();
        if n > threshold {
            return Distances::OnDemand(&points.coords);
        }
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = points.distance(i, j);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Distances::Matrix { n, d }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Distances::Matrix { n, d } => d[i * n + j],
            Distances::OnDemand(c) => dist(c[i], c[j]),
        }
    }
}

/// Nearest and second-nearest medoid per point.
struct NearCache {
    nearest: Vec<usize>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

struct Engine<'a> {
    dist: Distances<'a>,
    /// Decision weights: loads divided by their gcd, so that scaling every
    /// load by a constant leaves each comparison bit-identical.
    weights: Vec<f64>,
    /// Reporting weights: 1 or the raw load.
    raw_weights: Vec<f64>,
    n: usize,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl<'a> Engine<'a> {
    fn new(points: &'a PointSet, model: CostModel, threshold: usize) -> Self {
        let raw_weights: Vec<f64> = (0..points.len()).map(|i| points.weight(i, model)).collect();
        let weights = match model {
            CostModel::Unweighted => raw_weights.clone(),
            CostModel::LoadWeighted => {
                let g = points.loads.iter().fold(0, |g, &l| gcd(g, l)).max(1);
                points.loads.iter().map(|&l| (l / g) as f64).collect()
            }
        };
        Self {
            dist: Distances::build(points, threshold),
            weights,
            raw_weights,
            n: points.len(),
        }
    }

    /// Nearest-medoid assignment; `medoids` must be ascending. A medoid always
    /// serves itself, other ties go to the lowest medoid index. Returns the
    /// decision cost alongside.
    fn assign(&self, medoids: &[usize]) -> (Vec<usize>, f64) {
        let mut assignment = vec![usize::MAX; self.n];
        for &m in medoids {
            assignment[m] = m;
        }
        for (i, slot) in assignment.iter_mut().enumerate() {
            if *slot == i {
                continue;
            }
            let mut best = medoids[0];
            let mut best_d = self.dist.get(i, best);
            for &m in &medoids[1..] {
                let d = self.dist.get(i, m);
                if d < best_d {
                    best = m;
                    best_d = d;
                }
            }
            *slot = best;
        }
        let cost = self.sum_cost(&assignment, &self.weights);
        (assignment, cost)
    }

    fn sum_cost(&self, assignment: &[usize], weights: &[f64]) -> f64 {
        let mut cost = 0.0;
        for (i, &a) in assignment.iter().enumerate() {
            cost += weights[i] * self.dist.get(i, a);
        }
        cost
    }

    /// Cost under the caller's cost model, summed in index order.
    fn reported_cost(&self, assignment: &[usize]) -> f64 {
        self.sum_cost(assignment, &self.raw_weights)
    }

    fn near_cache(&self, medoids: &[usize], assignment: &[usize]) -> NearCache {
        let mut d1 = Vec::with_capacity(self.n);
        let mut d2 = Vec::with_capacity(self.n);
        for (i, &a) in assignment.iter().enumerate() {
            let mut second = f64::INFINITY;
            for &m in medoids {
                if m != a {
                    second = second.min(self.dist.get(i, m));
                }
            }
            d1.push(self.dist.get(i, a));
            d2.push(second);
        }
        NearCache {
            nearest: assignment.to_vec(),
            d1,
            d2,
        }
    }

    /// Decision cost after exchanging `out` for `incoming`, summed in index
    /// order. Equal to the decision cost of a fresh assignment bit for bit.
    #[inline]
    fn swap_cost(&self, cache: &NearCache, out: usize, incoming: usize) -> f64 {
        let mut cost = 0.0;
        for o in 0..self.n {
            let kept = if cache.nearest[o] == out {
                cache.d2[o]
            } else {
                cache.d1[o]
            };
            cost += self.weights[o] * kept.min(self.dist.get(o, incoming));
        }
        cost
    }

    /// Lowest-cost exchange as `(out, in, decision cost)` if it beats
    /// `current_cost`.
    fn best_exchange(
        &self,
        medoids: &[usize],
        assignment: &[usize],
        current_cost: f64,
    ) -> Option<(usize, usize, f64)> {
        let cache = self.near_cache(medoids, assignment);
        let mut is_medoid = vec![false; self.n];
        for &m in medoids {
            is_medoid[m] = true;
        }
        let mut best: Option<(usize, usize, f64)> = None;
        for &out in medoids {
            for h in (0..self.n).filter(|&h| !is_medoid[h]) {
                let c = self.swap_cost(&cache, out, h);
                if best.is_none_or(|b| c < b.2) {
                    best = Some((out, h, c));
                }
            }
        }
        best.filter(|b| b.2 < current_cost)
    }

    fn search(&self, mut medoids: Vec<usize>, cap: usize) -> Result<Clustering, ClusterError> {
        medoids.sort_unstable();
        let (mut assignment, mut cost) = self.assign(&medoids);
        let mut trace = vec![self.reported_cost(&assignment)];
        let mut iterations = 0;
        while let Some((out, incoming, next_cost)) = self.best_exchange(&medoids, &assignment, cost) {
            if iterations == cap {
                return Err(ClusterError::NonConvergence { cap });
            }
            let slot = medoids
                .iter()
                .position(|&m| m == out)
                .expect("swap removes a current medoid");
            medoids[slot] = incoming;
            medoids.sort_unstable();
            (assignment, cost) = self.assign(&medoids);
            debug_assert_eq!(cost, next_cost);
            iterations += 1;
            trace.push(self.reported_cost(&assignment));
        }
        Ok(Clustering {
            cost: *trace.last().expect("trace starts non-empty"),
            medoids,
            assignment,
            iterations,
            trace,
        })
    }
}

/// `k` distinct point indices drawn uniformly without replacement from a
/// ChaCha8 stream seeded with `seed`. Returned ascending.
pub fn select_initial_medoids(n: usize, k: usize, seed: u64) -> Result<Vec<usize>, ClusterError> {
    if k == 0 || k > n {
        return Err(ClusterError::KOutOfRange { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut medoids = rand::seq::index::sample(&mut rng, n, k).into_vec();
    medoids.sort_unstable();
    Ok(medoids)
}

/// Assigns each point to its nearest medoid (distance only, loads never
/// affect membership) and returns the assignment with its cost.
pub fn assign(points: &PointSet, medoids: &[usize], model: CostModel) -> (Vec<usize>, f64) {
    assert!(!medoids.is_empty(), "at least one medoid required");
    let mut sorted = medoids.to_vec();
    sorted.sort_unstable();
    let engine = Engine::new(points, model, DEFAULT_MATRIX_THRESHOLD);
    let (assignment, _) = engine.assign(&sorted);
    let cost = engine.reported_cost(&assignment);
    (assignment, cost)
}

/// The improving exchange with the lowest resulting cost, if any. Equal
/// costs resolve to the lowest `(medoid_out, candidate_in)` pair.
pub fn best_swap(points: &PointSet, clustering: &Clustering, model: CostModel) -> Option<SwapCandidate> {
    let engine = Engine::new(points, model, DEFAULT_MATRIX_THRESHOLD);
    let mut medoids = clustering.medoids.clone();
    medoids.sort_unstable();
    let (assignment, current) = engine.assign(&medoids);
    let (out, incoming, _) = engine.best_exchange(&medoids, &assignment, current)?;
    medoids.retain(|&m| m != out);
    medoids.push(incoming);
    medoids.sort_unstable();
    let (after, _) = engine.assign(&medoids);
    Some(SwapCandidate {
        medoid_out: out,
        candidate_in: incoming,
        resulting_cost: engine.reported_cost(&after),
    })
}

pub fn run_swap_search(
    points: &PointSet,
    k: usize,
    seed: u64,
    model: CostModel,
) -> Result<Clustering, ClusterError> {
    run_swap_search_with(points, k, seed, model, &SearchOptions::default())
}

/// Seeded initialization followed by steepest-descent swaps until no
/// exchange improves the cost.
pub fn run_swap_search_with(
    points: &PointSet,
    k: usize,
    seed: u64,
    model: CostModel,
    options: &SearchOptions,
) -> Result<Clustering, ClusterError> {
    let initial = select_initial_medoids(points.len(), k, seed)?;
    search_from(points, initial, model, options)
}

/// Swap search starting from the given medoids.
pub fn search_from(
    points: &PointSet,
    medoids: Vec<usize>,
    model: CostModel,
    options: &SearchOptions,
) -> Result<Clustering, ClusterError> {
    let n = points.len();
    let k = medoids.len();
    if k == 0 || k > n || medoids.iter().any(|&m| m >= n) {
        return Err(ClusterError::KOutOfRange { k, n });
    }
    let cap = options.max_swaps.unwrap_or(10 * n * k);
    Engine::new(points, model, options.matrix_threshold).search(medoids, cap)
}
