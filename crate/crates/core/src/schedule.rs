//! Layered decoding schedules from greedy coloring of the check conflict graph.
//!
//! Two checks conflict when they share a variable node. A proper coloring of
//! the conflict graph yields layers whose checks touch disjoint variables, so
//! each layer can update the a-posteriori LLRs in one step.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gf2::BinaryMatrix;

/// Check-node conflict graph: the nonzero off-diagonal pattern of `H·Hᵀ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictGraph {
    adjacency: Vec<Vec<usize>>,
}

impl ConflictGraph {
    pub fn from_matrix(h: &BinaryMatrix) -> Self {
        let mut mark = vec![usize::MAX; h.rows()];
        let adjacency = (0..h.rows())
            .map(|check| {
                let mut nbrs = Vec::new();
                for &var in h.row(check) {
                    for &other in h.col(var) {
                        if other != check && mark[other] != check {
                            mark[other] = check;
                            nbrs.push(other);
                        }
                    }
                }
                nbrs.sort_unstable();
                nbrs
            })
            .collect();
        Self { adjacency }
    }

    /// Builds a graph from explicit neighbour lists, symmetrizing them.
    pub fn from_edges(n_checks: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n_checks];
        for &(a, b) in edges {
            if a >= n_checks || b >= n_checks {
                return Err(Error::InvalidInput(format!(
                    "edge ({a},{b}) out of range for {n_checks} checks"
                )));
            }
            if a == b {
                return Err(Error::InvalidInput(format!("self-loop on check {a}")));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { adjacency })
    }

    pub fn n_checks(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbours(&self, check: usize) -> &[usize] {
        &self.adjacency[check]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// One group of checks processed together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Layer {
    pub checks: Vec<usize>,
    /// Set when the layer came from merging color classes, so its checks may
    /// share variables.
    pub merged: bool,
}

/// Ordered partition of the checks into layers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerSchedule {
    layers: Vec<Layer>,
    chromatic_number: usize,
}

impl LayerSchedule {
    /// Wraps explicit layers, each assumed conflict free.
    pub fn from_layers(layers: Vec<Vec<usize>>) -> Self {
        let chromatic_number = layers.len();
        Self {
            layers: layers
                .into_iter()
                .map(|checks| Layer {
                    checks,
                    merged: false,
                })
                .collect(),
            chromatic_number,
        }
    }

    /// All checks in one layer that updates from a common snapshot, which is
    /// a flooding schedule.
    pub fn flooding(n_checks: usize) -> Self {
        Self {
            layers: vec![Layer {
                checks: (0..n_checks).collect(),
                merged: true,
            }],
            chromatic_number: 1,
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Colors used by the greedy pass that produced this schedule.
    pub fn chromatic_number(&self) -> usize {
        self.chromatic_number
    }

    /// True when some layer may contain conflicting checks.
    pub fn is_compromised(&self) -> bool {
        self.layers.iter().any(|l| l.merged)
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.checks.len()).collect()
    }

    pub fn n_checks(&self) -> usize {
        self.layers.iter().map(|l| l.checks.len()).sum()
    }

    /// Checks that the layers partition `0..n_checks`.
    pub fn is_partition_of(&self, n_checks: usize) -> bool {
        let mut seen = vec![false; n_checks];
        for layer in &self.layers {
            for &c in &layer.checks {
                if c >= n_checks || seen[c] {
                    return false;
                }
                seen[c] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// First pair of checks in a common layer that share a variable of `h`.
    pub fn find_conflict(&self, h: &BinaryMatrix) -> Option<(usize, usize)> {
        let mut owner = vec![usize::MAX; h.cols()];
        for layer in &self.layers {
            for &check in &layer.checks {
                for &var in h.row(check) {
                    if owner[var] != usize::MAX {
                        return Some((owner[var], check));
                    }
                    owner[var] = check;
                }
            }
            for &check in &layer.checks {
                for &var in h.row(check) {
                    owner[var] = usize::MAX;
                }
            }
        }
        None
    }

    /// Reduces the schedule to at most `k` layers.
    ///
    /// While more than `k` layers remain, the two smallest (lowest position on
    /// ties) are merged into the earlier position and marked as merged.
    pub fn force_layer_count(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParams(
                "layer count must be at least 1".into(),
            ));
        }
        let mut layers = self.layers.clone();
        while layers.len() > k {
            let mut order: Vec<usize> = (0..layers.len()).collect();
            order.sort_by_key(|&i| (layers[i].checks.len(), i));
            let (lo, hi) = (order[0].min(order[1]), order[0].max(order[1]));
            let absorbed = layers.remove(hi);
            let target = &mut layers[lo];
            target.checks.extend(absorbed.checks);
            target.checks.sort_unstable();
            target.merged = true;
        }
        Ok(Self {
            layers,
            chromatic_number: self.chromatic_number,
        })
    }
}

/// Greedy coloring in natural check order: each check takes the smallest
/// color not used by an already-colored neighbour.
pub fn greedy_color(graph: &ConflictGraph) -> LayerSchedule {
    let n = graph.n_checks();
    let mut color = vec![usize::MAX; n];
    let mut used = Vec::new();
    let mut layers: Vec<Vec<usize>> = Vec::new();
    for m in 0..n {
        used.clear();
        used.resize(layers.len() + 1, false);
        for &nb in graph.neighbours(m) {
            if color[nb] != usize::MAX {
                used[color[nb]] = true;
            }
        }
        let c = used.iter().position(|&u| !u).expect("a free color exists");
        color[m] = c;
        if c == layers.len() {
            layers.push(Vec::new());
        }
        layers[c].push(m);
    }
    LayerSchedule::from_layers(layers)
}

/// Conflict graph plus greedy coloring, optionally forced to `layers` layers.
pub fn schedule_for(h: &BinaryMatrix, layers: Option<usize>) -> Result<LayerSchedule> {
    let schedule = greedy_color(&ConflictGraph::from_matrix(h));
    match layers {
        Some(k) => schedule.force_layer_count(k),
        None => Ok(schedule),
    }
}
