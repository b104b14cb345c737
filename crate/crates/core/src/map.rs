//! Digitized city map: intersection nodes carrying subscriber load, streets
//! linking them, and the declared planning area.
//!
//! The interchange format is a single JSON document:
//!
//! ```json
//! {"area_m2": 230850.0,
//!  "nodes":   [{"id": 0, "x": 0.0, "y": 0.0, "load": 12, "name": "Main/1st"}],
//!  "streets": [{"id": 0, "from": 0, "to": 1, "load": 40}]}
//! ```
//!
//! Record order in the file does not matter; nodes and streets are kept
//! sorted by id. Unknown keys (e.g. a node `capacity`) are accepted and
//! ignored.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("malformed map document: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("map has no nodes")]
    NoNodes,
    #[error("non-positive area: {0} m2")]
    NonPositiveArea(f64),
    #[error("duplicate node id={0}")]
    DuplicateNode(u64),
    #[error("duplicate street id={0}")]
    DuplicateStreet(u64),
    #[error("dangling endpoint, street id={street} references missing node id={node}")]
    DanglingEndpoint { street: u64, node: u64 },
    #[error("street id={0} starts and ends at the same node")]
    SelfLoop(u64),
    #[error("negative load {load} on node id={id}")]
    NegativeNodeLoad { id: u64, load: i64 },
    #[error("negative load {load} on street id={id}")]
    NegativeStreetLoad { id: u64, load: i64 },
    #[error("non-finite coordinate on node id={0}")]
    NonFiniteCoordinate(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub id: u64,
    /// Map-local easting, meters.
    pub x: f64,
    /// Map-local northing, meters.
    pub y: f64,
    /// Subscribers attached directly to this node.
    pub load: u64,
    pub name: Option<String>,
}

impl NodeRecord {
    pub fn new(id: u64, x: f64, y: f64, load: u64) -> Self {
        Self {
            id,
            x,
            y,
            load,
            name: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreetRecord {
    pub id: u64,
    pub from: u64,
    pub to: u64,
    pub load: u64,
    pub name: Option<String>,
}

impl StreetRecord {
    pub fn new(id: u64, from: u64, to: u64, load: u64) -> Self {
        Self {
            id,
            from,
            to,
            load,
            name: None,
        }
    }
}

/// A validated planning map. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanningMap {
    area_m2: f64,
    nodes: Vec<NodeRecord>,
    streets: Vec<StreetRecord>,
    effective_load: Vec<u64>,
}

impl PlanningMap {
    /// Validates the records and computes effective loads. Input order is
    /// irrelevant: both lists are sorted by id.
    pub fn new(
        area_m2: f64,
        mut nodes: Vec<NodeRecord>,
        mut streets: Vec<StreetRecord>,
    ) -> Result<Self, MapError> {
        if !area_m2.is_finite() || area_m2 <= 0.0 {
            return Err(MapError::NonPositiveArea(area_m2));
        }
        if nodes.is_empty() {
            return Err(MapError::NoNodes);
        }
        nodes.sort_by_key(|n| n.id);
        streets.sort_by_key(|s| s.id);

        for pair in nodes.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(MapError::DuplicateNode(pair[0].id));
            }
        }
        if let Some(n) = nodes.iter().find(|n| !n.x.is_finite() || !n.y.is_finite()) {
            return Err(MapError::NonFiniteCoordinate(n.id));
        }
        for pair in streets.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(MapError::DuplicateStreet(pair[0].id));
            }
        }
        let ids: BTreeSet<u64> = nodes.iter().map(|n| n.id).collect();
        for s in &streets {
            for end in [s.from, s.to] {
                if !ids.contains(&end) {
                    return Err(MapError::DanglingEndpoint {
                        street: s.id,
                        node: end,
                    });
                }
            }
            if s.from == s.to {
                return Err(MapError::SelfLoop(s.id));
            }
        }

        let effective_load = distribute_street_loads(&nodes, &streets);
        Ok(Self {
            area_m2,
            nodes,
            streets,
            effective_load,
        })
    }

    pub fn area_m2(&self) -> f64 {
        self.area_m2
    }

    /// Nodes sorted by ascending id.
    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    /// Streets sorted by ascending id.
    pub fn streets(&self) -> &[StreetRecord] {
        &self.streets
    }

    /// Per-node load after street distribution, aligned with [`Self::nodes`].
    pub fn effective_loads(&self) -> &[u64] {
        &self.effective_load
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Position of `id` in [`Self::nodes`].
    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok()
    }

    pub fn total_load(&self) -> u64 {
        total_load(self)
    }

    /// Copy of this map with every node and street load multiplied by `factor`.
    pub fn scale_loads(&self, factor: u64) -> Self {
        let nodes = self
            .nodes
            .iter()
            .map(|n| NodeRecord {
                load: n.load * factor,
                ..n.clone()
            })
            .collect();
        let streets = self
            .streets
            .iter()
            .map(|s| StreetRecord {
                load: s.load * factor,
                ..s.clone()
            })
            .collect();
        Self::new(self.area_m2, nodes, streets).expect("scaling preserves validity")
    }

    /// Canonical JSON: sorted keys, records sorted by id, compact layout.
    pub fn to_json(&self) -> String {
        emit_map(self)
    }
}

/// Sum of effective loads.
pub fn total_load(map: &PlanningMap) -> u64 {
    map.effective_load.iter().sum()
}

/// Moves street demand onto nodes. Each street's load is split evenly
/// between its endpoints; an odd unit goes to the endpoint with the lower
/// id. The result is aligned with `nodes` and independent of street order.
///
/// Both slices must already be validated (endpoints exist).
pub fn distribute_street_loads(nodes: &[NodeRecord], streets: &[StreetRecord]) -> Vec<u64> {
    let index: BTreeMap<u64, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    let mut load: Vec<u64> = nodes.iter().map(|n| n.load).collect();
    for s in streets {
        let (lo, hi) = if s.from < s.to {
            (s.from, s.to)
        } else {
            (s.to, s.from)
        };
        let half = s.load / 2;
        load[index[&lo]] += half + s.load % 2;
        load[index[&hi]] += half;
    }
    load
}

#[derive(Deserialize)]
struct RawMap {
    area_m2: f64,
    nodes: Vec<RawNode>,
    #[serde(default)]
    streets: Vec<RawStreet>,
}

#[derive(Deserialize)]
struct RawNode {
    id: u64,
    x: f64,
    y: f64,
    load: i64,
    #[serde(default)]
    name: Option<String>,
}

#[derive(Deserialize)]
struct RawStreet {
    id: u64,
    from: u64,
    to: u64,
    load: i64,
    #[serde(default)]
    name: Option<String>,
}

/// Parses and validates a map document.
pub fn parse_map(bytes: &[u8]) -> Result<PlanningMap, MapError> {
    let raw: RawMap = serde_json::from_slice(bytes)?;
    let nodes = raw
        .nodes
        .into_iter()
        .map(|n| {
            let load = u64::try_from(n.load).map_err(|_| MapError::NegativeNodeLoad {
                id: n.id,
                load: n.load,
            })?;
            Ok(NodeRecord {
                id: n.id,
                x: n.x,
                y: n.y,
                load,
                name: n.name,
            })
        })
        .collect::<Result<Vec<_>, MapError>>()?;
    let streets = raw
        .streets
        .into_iter()
        .map(|s| {
            let load = u64::try_from(s.load).map_err(|_| MapError::NegativeStreetLoad {
                id: s.id,
                load: s.load,
            })?;
            Ok(StreetRecord {
                id: s.id,
                from: s.from,
                to: s.to,
                load,
                name: s.name,
            })
        })
        .collect::<Result<Vec<_>, MapError>>()?;
    PlanningMap::new(raw.area_m2, nodes, streets)
}

fn with_name(mut obj: Map<String, Value>, name: &Option<String>) -> Value {
    if let Some(name) = name {
        obj.insert("name".into(), Value::String(name.clone()));
    }
    Value::Object(obj)
}

/// Serializes a map in canonical form. `serde_json`'s object type keeps
/// keys sorted, so the output is stable across runs.
pub fn emit_map(map: &PlanningMap) -> String {
    let nodes: Vec<Value> = map
        .nodes
        .iter()
        .map(|n| {
            let obj = json!({"id": n.id, "x": n.x, "y": n.y, "load": n.load});
            with_name(obj.as_object().cloned().unwrap_or_default(), &n.name)
        })
        .collect();
    let streets: Vec<Value> = map
        .streets
        .iter()
        .map(|s| {
            let obj = json!({"id": s.id, "from": s.from, "to": s.to, "load": s.load});
            with_name(obj.as_object().cloned().unwrap_or_default(), &s.name)
        })
        .collect();
    let doc = json!({"area_m2": map.area_m2, "nodes": nodes, "streets": streets});
    serde_json::to_string(&doc).expect("map serializes")
}
