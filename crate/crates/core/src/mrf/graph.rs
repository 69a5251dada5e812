use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected graph over discrete variables.
///
/// Edges are stored canonically as `(s, t)` with `s < t`; edge tables of a
/// model built on this graph are indexed `[x_s][x_t]` in that orientation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct GraphStructure {
    cardinalities: Vec<usize>,
    edges: Vec<(usize, usize)>,
    // (neighbor, edge index) per vertex, in edge order
    adjacency: Vec<Vec<(usize, usize)>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    vertex_count: usize,
    cardinalities: Vec<usize>,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<RawGraph> for GraphStructure {
    type Error = Error;

    fn try_from(raw: RawGraph) -> Result<Self> {
        if raw.vertex_count != raw.cardinalities.len() {
            return Err(Error::InvalidGraph(format!(
                "vertex_count is {} but {} cardinalities were given",
                raw.vertex_count,
                raw.cardinalities.len()
            )));
        }
        GraphStructure::new(raw.cardinalities, raw.edges)
    }
}

impl From<GraphStructure> for RawGraph {
    fn from(g: GraphStructure) -> Self {
        RawGraph {
            vertex_count: g.vertex_count(),
            cardinalities: g.cardinalities,
            edges: g.edges,
        }
    }
}

impl GraphStructure {
    pub fn new(cardinalities: Vec<usize>, edges: Vec<(usize, usize)>) -> Result<Self> {
        if cardinalities.is_empty() {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        if let Some((v, &c)) = cardinalities.iter().enumerate().find(|(_, &c)| c < 2) {
            return Err(Error::InvalidGraph(format!(
                "vertex {v} has cardinality {c}; at least 2 states are required"
            )));
        }
        let d = cardinalities.len();
        let mut seen = HashSet::with_capacity(edges.len());
        let mut canonical = Vec::with_capacity(edges.len());
        for &(a, b) in &edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on vertex {a}")));
            }
            if a >= d || b >= d {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) references a vertex outside 0..{d}"
                )));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", e.0, e.1)));
            }
            canonical.push(e);
        }
        let mut adjacency = vec![Vec::new(); d];
        for (i, &(s, t)) in canonical.iter().enumerate() {
            adjacency[s].push((t, i));
            adjacency[t].push((s, i));
        }
        Ok(GraphStructure {
            cardinalities,
            edges: canonical,
            adjacency,
        })
    }

    /// Grid with `rows * cols` vertices, indexed row-major.
    pub fn grid(rows: usize, cols: usize, cardinality: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "grid dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if cardinality < 2 {
            return Err(Error::InvalidArgument(format!(
                "cardinality must be at least 2, got {cardinality}"
            )));
        }
        let d = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::InvalidArgument("grid too large".into()))?;
        let mut edges = Vec::with_capacity(2 * d);
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        GraphStructure::new(vec![cardinality; d], edges)
    }

    pub fn chain(len: usize, cardinality: usize) -> Result<Self> {
        Self::grid(1, len, cardinality)
    }

    pub fn vertex_count(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn cardinality(&self, v: usize) -> usize {
        self.cardinalities[v]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbors of `v` together with the index of the connecting edge.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// X_max: largest state space.
    pub fn max_cardinality(&self) -> usize {
        self.cardinalities.iter().copied().max().unwrap_or(0)
    }

    /// N_max: largest neighborhood.
    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Number of joint configurations, saturating at `u128::MAX`.
    pub fn state_space_size(&self) -> u128 {
        self.cardinalities
            .iter()
            .fold(1u128, |acc, &c| acc.saturating_mul(c as u128))
    }

    pub fn edge_table_len(&self, e: usize) -> usize {
        let (s, t) = self.edges[e];
        self.cardinalities[s] * self.cardinalities[t]
    }

    /// True if the graph has no cycles (a forest).
    pub fn is_acyclic(&self) -> bool {
        let mut dsu = DisjointSets::new(self.vertex_count());
        self.edges.iter().all(|&(s, t)| dsu.union(s, t))
    }

    /// Connected components, each sorted, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut dsu = DisjointSets::new(self.vertex_count());
        for &(s, t) in &self.edges {
            dsu.union(s, t);
        }
        let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); self.vertex_count()];
        for v in 0..self.vertex_count() {
            by_root[dsu.find(v)].push(v);
        }
        let mut comps: Vec<Vec<usize>> = by_root.into_iter().filter(|c| !c.is_empty()).collect();
        comps.sort_by_key(|c| c[0]);
        comps
    }

    /// Checks that `x` is a valid joint assignment for this graph.
    pub fn validate_assignment(&self, x: &[usize]) -> Result<()> {
        if x.len() != self.vertex_count() {
            return Err(Error::InvalidAssignment(format!(
                "expected {} states, got {}",
                self.vertex_count(),
                x.len()
            )));
        }
        for (v, (&s, &c)) in x.iter().zip(&self.cardinalities).enumerate() {
            if s >= c {
                return Err(Error::InvalidAssignment(format!(
                    "state {s} out of range for vertex {v} with {c} states"
                )));
            }
        }
        Ok(())
    }
}

pub(crate) struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}
