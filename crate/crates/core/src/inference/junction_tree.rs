//! Junction tree construction (min-fill triangulation, maximum-weight
//! spanning clique tree) and Shafer-Shenoy sum-product calibration.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::InferenceReport;
use crate::error::{Error, Result};
use crate::mrf::{DiscreteMRF, DisjointSets, GraphStructure, MarginalSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeEdge {
    pub a: usize,
    pub b: usize,
    pub separator: Vec<usize>,
}

/// Clique tree over a triangulation of the model graph.
///
/// Disconnected graphs yield one tree whose components are joined by
/// empty separators, so the result is always a single spanning tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JunctionTree {
    vertex_count: usize,
    cliques: Vec<Vec<usize>>,
    tree_edges: Vec<TreeEdge>,
    width: usize,
    elimination_order: Vec<usize>,
}

impl JunctionTree {
    /// Maximal cliques, each sorted ascending.
    pub fn cliques(&self) -> &[Vec<usize>] {
        &self.cliques
    }

    pub fn tree_edges(&self) -> &[TreeEdge] {
        &self.tree_edges
    }

    /// Largest clique size minus one.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn elimination_order(&self) -> &[usize] {
        &self.elimination_order
    }

    /// Σ_C Π_{v∈C} |X_v|, saturating.
    pub fn table_cells(&self, graph: &GraphStructure) -> u128 {
        self.cliques
            .iter()
            .map(|c| clique_cells(graph, c))
            .fold(0u128, u128::saturating_add)
    }

    pub fn max_clique_cells(&self, graph: &GraphStructure) -> u128 {
        self.cliques.iter().map(|c| clique_cells(graph, c)).max().unwrap_or(0)
    }

    /// Structural checks: spanning tree over cliques, running intersection,
    /// and coverage of every vertex and edge of `graph`.
    pub fn verify(&self, graph: &GraphStructure) -> Result<()> {
        let k = self.cliques.len();
        let fail = |msg: String| Err(Error::InvalidArgument(format!("junction tree: {msg}")));
        if self.vertex_count != graph.vertex_count() {
            return fail(format!(
                "built for {} vertices, graph has {}",
                self.vertex_count,
                graph.vertex_count()
            ));
        }
        if self.tree_edges.len() + 1 != k {
            return fail(format!("{} tree edges for {k} cliques", self.tree_edges.len()));
        }
        let mut dsu = DisjointSets::new(k);
        for te in &self.tree_edges {
            if te.a >= k || te.b >= k || !dsu.union(te.a, te.b) {
                return fail(format!("tree edge ({}, {}) is invalid or closes a cycle", te.a, te.b));
            }
            let expect = intersect(&self.cliques[te.a], &self.cliques[te.b]);
            if expect != te.separator {
                return fail(format!(
                    "separator of ({}, {}) is not the clique intersection",
                    te.a, te.b
                ));
            }
        }
        for v in 0..graph.vertex_count() {
            let holding: Vec<usize> = (0..k).filter(|&c| self.cliques[c].binary_search(&v).is_ok()).collect();
            if holding.is_empty() {
                return fail(format!("vertex {v} is in no clique"));
            }
            // cliques holding v must be connected using only edges whose separator has v
            let mut dsu = DisjointSets::new(k);
            let mut joins = 0;
            for te in &self.tree_edges {
                if te.separator.binary_search(&v).is_ok() && dsu.union(te.a, te.b) {
                    joins += 1;
                }
            }
            if joins + 1 != holding.len() {
                return fail(format!("running intersection violated for vertex {v}"));
            }
        }
        for &(s, t) in graph.edges() {
            if !self
                .cliques
                .iter()
                .any(|c| c.binary_search(&s).is_ok() && c.binary_search(&t).is_ok())
            {
                return fail(format!("edge ({s}, {t}) not covered by any clique"));
            }
        }
        Ok(())
    }
}

fn clique_cells(graph: &GraphStructure, clique: &[usize]) -> u128 {
    clique
        .iter()
        .fold(1u128, |acc, &v| acc.saturating_mul(graph.cardinality(v) as u128))
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().filter(|v| b.binary_search(v).is_ok()).copied().collect()
}

fn is_subset(small: &[usize], big: &[usize]) -> bool {
    small.len() <= big.len() && small.iter().all(|v| big.binary_search(v).is_ok())
}

/// Greedy min-fill elimination; ties go to the lowest vertex index.
/// Returns the order and the clique formed at each elimination step.
fn min_fill_elimination(graph: &GraphStructure) -> (Vec<usize>, Vec<Vec<usize>>) {
    let d = graph.vertex_count();
    let mut adj: Vec<BTreeSet<usize>> = (0..d)
        .map(|v| graph.neighbors(v).iter().map(|&(u, _)| u).collect())
        .collect();
    let mut remaining = vec![true; d];
    let mut order = Vec::with_capacity(d);
    let mut cliques = Vec::with_capacity(d);
    for _ in 0..d {
        let mut best: Option<(usize, usize)> = None;
        for v in (0..d).filter(|&v| remaining[v]) {
            let nbrs: Vec<usize> = adj[v].iter().copied().collect();
            let mut fill = 0;
            for (i, &a) in nbrs.iter().enumerate() {
                for &b in &nbrs[i + 1..] {
                    if !adj[a].contains(&b) {
                        fill += 1;
                    }
                }
            }
            if best.is_none_or(|(f, _)| fill < f) {
                best = Some((fill, v));
            }
        }
        let (_, v) = best.expect("a remaining vertex exists");
        let nbrs: Vec<usize> = adj[v].iter().copied().collect();
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &u in &nbrs {
            adj[u].remove(&v);
        }
        let mut clique = nbrs;
        clique.push(v);
        clique.sort_unstable();
        remaining[v] = false;
        order.push(v);
        cliques.push(clique);
    }
    (order, cliques)
}

/// Min-fill triangulation, maximal clique extraction and a maximum-weight
/// spanning tree on separator sizes (Kruskal, ties by clique index).
pub fn build_junction_tree(graph: &GraphStructure) -> JunctionTree {
    let (order, elim_cliques) = min_fill_elimination(graph);

    let mut cliques: Vec<Vec<usize>> = Vec::new();
    for (i, c) in elim_cliques.iter().enumerate() {
        let dominated = elim_cliques
            .iter()
            .enumerate()
            .any(|(j, other)| j != i && is_subset(c, other) && (c.len() < other.len() || j < i));
        if !dominated {
            cliques.push(c.clone());
        }
    }

    let k = cliques.len();
    let mut candidates = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for i in 0..k {
        for j in (i + 1)..k {
            candidates.push((intersect(&cliques[i], &cliques[j]), i, j));
        }
    }
    candidates.sort_by(|x, y| y.0.len().cmp(&x.0.len()).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut dsu = DisjointSets::new(k);
    let mut tree_edges = Vec::with_capacity(k.saturating_sub(1));
    for (separator, a, b) in candidates {
        if dsu.union(a, b) {
            tree_edges.push(TreeEdge { a, b, separator });
            if tree_edges.len() + 1 == k {
                break;
            }
        }
    }

    let width = cliques.iter().map(Vec::len).max().unwrap_or(1) - 1;
    JunctionTree {
        vertex_count: graph.vertex_count(),
        cliques,
        tree_edges,
        width,
        elimination_order: order,
    }
}

/// Settings for junction tree inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JtConfig {
    /// Largest admissible clique table, in cells.
    pub max_clique_cells: u64,
}

impl Default for JtConfig {
    fn default() -> Self {
        JtConfig {
            max_clique_cells: 1 << 24,
        }
    }
}

/// Dense table over sorted variables, last variable fastest.
struct Table {
    vars: Vec<usize>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Table {
    /// For each cell, the index of the corresponding cell in the table over
    /// `sub` (which must be a subset of `self.vars`, sorted).
    fn projection(&self, sub: &[usize]) -> Vec<usize> {
        let n = self.values.len();
        let len = self.vars.len();
        let mut sub_strides = vec![0usize; len];
        let mut stride = 1;
        for p in (0..len).rev() {
            if sub.binary_search(&self.vars[p]).is_ok() {
                sub_strides[p] = stride;
                stride *= self.cards[p];
            }
        }
        let mut map = Vec::with_capacity(n);
        let mut counter = vec![0usize; len];
        let mut idx = 0usize;
        for _ in 0..n {
            map.push(idx);
            for p in (0..len).rev() {
                counter[p] += 1;
                idx += sub_strides[p];
                if counter[p] < self.cards[p] {
                    break;
                }
                idx -= sub_strides[p] * self.cards[p];
                counter[p] = 0;
            }
        }
        map
    }
}

fn sum_into(values: &[f64], map: &[usize], out_len: usize) -> Vec<f64> {
    let mut out = vec![0.0; out_len];
    for (v, &i) in values.iter().zip(map) {
        out[i] += *v;
    }
    out
}

fn normalize(values: &mut [f64]) -> Result<f64> {
    let s: f64 = values.iter().sum();
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::DegenerateModel);
    }
    values.iter_mut().for_each(|v| *v /= s);
    Ok(s)
}

/// Exact marginals and ln Z by sum-product calibration of `jt`.
pub fn jt_infer(mrf: &DiscreteMRF, jt: &JunctionTree) -> Result<InferenceReport> {
    jt_infer_with(mrf, jt, &JtConfig::default())
}

pub fn jt_infer_with(mrf: &DiscreteMRF, jt: &JunctionTree, config: &JtConfig) -> Result<InferenceReport> {
    let graph = mrf.graph();
    if jt.vertex_count != graph.vertex_count() {
        return Err(Error::InvalidArgument(
            "junction tree was built for a different graph".into(),
        ));
    }
    let largest = jt.max_clique_cells(graph);
    if largest > config.max_clique_cells as u128 {
        return Err(Error::MemoryCapExceeded {
            cells: largest,
            cap: config.max_clique_cells,
            width: jt.width,
        });
    }

    let k = jt.cliques.len();
    let contains = |c: usize, v: usize| jt.cliques[c].binary_search(&v).is_ok();

    // clique potentials in log space, then max-shifted and exponentiated
    let mut tables: Vec<Table> = jt
        .cliques
        .iter()
        .map(|c| {
            let cards: Vec<usize> = c.iter().map(|&v| graph.cardinality(v)).collect();
            let n = cards.iter().product();
            Table {
                vars: c.clone(),
                cards,
                values: vec![0.0; n],
            }
        })
        .collect();
    for v in 0..graph.vertex_count() {
        let c = (0..k)
            .find(|&c| contains(c, v))
            .ok_or_else(|| Error::InvalidArgument(format!("junction tree does not cover vertex {v}")))?;
        let map = tables[c].projection(&[v]);
        let w = &mrf.vertex_weights()[v];
        for (val, &i) in tables[c].values.iter_mut().zip(&map) {
            *val += w[i];
        }
    }
    for (e, &(s, t)) in graph.edges().iter().enumerate() {
        let c = (0..k)
            .find(|&c| contains(c, s) && contains(c, t))
            .ok_or_else(|| Error::InvalidArgument(format!("junction tree does not cover edge ({s}, {t})")))?;
        let map = tables[c].projection(&[s, t]);
        let w = &mrf.edge_weights()[e];
        for (val, &i) in tables[c].values.iter_mut().zip(&map) {
            *val += w[i];
        }
    }
    let mut log_shift = 0.0;
    for t in &mut tables {
        let max = t.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        log_shift += max;
        t.values.iter_mut().for_each(|x| *x = (*x - max).exp());
    }

    // tree adjacency: (neighbor clique, tree edge index)
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); k];
    for (i, te) in jt.tree_edges.iter().enumerate() {
        adjacency[te.a].push((te.b, i));
        adjacency[te.b].push((te.a, i));
    }
    // per tree edge: separator size and projections from both endpoint cliques
    let sep_len: Vec<usize> = jt
        .tree_edges
        .iter()
        .map(|te| te.separator.iter().map(|&v| graph.cardinality(v)).product())
        .collect();
    let proj: Vec<[Vec<usize>; 2]> = jt
        .tree_edges
        .iter()
        .map(|te| {
            [
                tables[te.a].projection(&te.separator),
                tables[te.b].projection(&te.separator),
            ]
        })
        .collect();
    let side = |edge: usize, clique: usize| usize::from(jt.tree_edges[edge].a != clique);

    // BFS from clique 0
    let mut order = Vec::with_capacity(k);
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; k];
    let mut visited = vec![false; k];
    visited[0] = true;
    order.push(0);
    let mut head = 0;
    while head < order.len() {
        let c = order[head];
        head += 1;
        for &(o, e) in &adjacency[c] {
            if !visited[o] {
                visited[o] = true;
                parent[o] = Some((c, e));
                order.push(o);
            }
        }
    }

    // messages[edge][direction]: direction 0 is a→b, 1 is b→a
    let mut messages: Vec<[Option<Vec<f64>>; 2]> = vec![[None, None]; jt.tree_edges.len()];
    let incoming_product = |c: usize, skip: Option<usize>, messages: &[[Option<Vec<f64>>; 2]]| -> Vec<f64> {
        let mut prod = tables[c].values.clone();
        for &(_, e) in &adjacency[c] {
            if Some(e) == skip {
                continue;
            }
            // message into c travels in the direction away from the other end
            let dir = 1 - side(e, c);
            let msg = messages[e][dir].as_ref().expect("message scheduled before use");
            let map = &proj[e][side(e, c)];
            for (p, &i) in prod.iter_mut().zip(map) {
                *p *= msg[i];
            }
        }
        prod
    };

    let mut log_norms = 0.0;
    for &c in order.iter().skip(1).rev() {
        let (_, e) = parent[c].expect("non-root clique has a parent");
        let prod = incoming_product(c, Some(e), &messages);
        let mut msg = sum_into(&prod, &proj[e][side(e, c)], sep_len[e]);
        log_norms += normalize(&mut msg)?.ln();
        messages[e][side(e, c)] = Some(msg);
    }
    let root_total: f64 = incoming_product(0, None, &messages).iter().sum();
    if !(root_total > 0.0 && root_total.is_finite()) {
        return Err(Error::DegenerateModel);
    }
    let log_z = root_total.ln() + log_norms + log_shift;

    for &c in &order {
        for &(o, e) in &adjacency[c] {
            if parent[c].map(|(_, pe)| pe) == Some(e) {
                continue;
            }
            debug_assert_eq!(parent[o].map(|(p, _)| p), Some(c));
            let prod = incoming_product(c, Some(e), &messages);
            let mut msg = sum_into(&prod, &proj[e][side(e, c)], sep_len[e]);
            normalize(&mut msg)?;
            messages[e][side(e, c)] = Some(msg);
        }
    }

    let beliefs: Vec<Vec<f64>> = (0..k)
        .map(|c| {
            let mut b = incoming_product(c, None, &messages);
            normalize(&mut b).map(|_| b)
        })
        .collect::<Result<_>>()?;

    // read marginals off the smallest clique holding the variables
    let smallest_holding = |vars: &[usize]| -> usize {
        (0..k)
            .filter(|&c| vars.iter().all(|&v| contains(c, v)))
            .min_by_key(|&c| (tables[c].values.len(), c))
            .expect("coverage checked above")
    };
    let vertex = (0..graph.vertex_count())
        .map(|v| {
            let c = smallest_holding(&[v]);
            sum_into(&beliefs[c], &tables[c].projection(&[v]), graph.cardinality(v))
        })
        .collect();
    let edge = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(e, &(s, t))| {
            let c = smallest_holding(&[s, t]);
            sum_into(&beliefs[c], &tables[c].projection(&[s, t]), graph.edge_table_len(e))
        })
        .collect();

    Ok(InferenceReport {
        marginals: MarginalSet {
            vertex,
            edge,
            log_partition: Some(log_z),
        },
        exact: true,
        converged: true,
        iterations_used: 1,
        analytic_table_cells: jt.table_cells(graph).min(u64::MAX as u128) as u64,
    })
}
