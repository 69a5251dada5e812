use serde::{Deserialize, Serialize};

use super::graph::GraphStructure;

/// Per-vertex and per-edge probability tables, plus ln Z when the producer
/// computes it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalSet {
    pub vertex: Vec<Vec<f64>>,
    /// Row-major `[x_s][x_t]` tables in graph edge order.
    pub edge: Vec<Vec<f64>>,
    pub log_partition: Option<f64>,
}

impl MarginalSet {
    /// Uniform tables over every vertex and edge of `graph`.
    pub fn uniform(graph: &GraphStructure) -> Self {
        let vertex = graph.cardinalities().iter().map(|&c| vec![1.0 / c as f64; c]).collect();
        let edge = (0..graph.edge_count())
            .map(|e| {
                let n = graph.edge_table_len(e);
                vec![1.0 / n as f64; n]
            })
            .collect();
        MarginalSet {
            vertex,
            edge,
            log_partition: None,
        }
    }

    /// Largest deviation from 1 of any table sum; `None` if a negative or
    /// non-finite entry is present.
    pub fn normalization_error(&self) -> Option<f64> {
        let mut worst: f64 = 0.0;
        for table in self.vertex.iter().chain(&self.edge) {
            if table.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
                return None;
            }
            worst = worst.max((table.iter().sum::<f64>() - 1.0).abs());
        }
        Some(worst)
    }

    /// Largest disagreement between an edge table's row/column sums and the
    /// vertex tables at its endpoints.
    pub fn consistency_error(&self, graph: &GraphStructure) -> f64 {
        let mut worst: f64 = 0.0;
        for (e, &(s, t)) in graph.edges().iter().enumerate() {
            let (cs, ct) = (graph.cardinality(s), graph.cardinality(t));
            let table = &self.edge[e];
            for a in 0..cs {
                let row: f64 = table[a * ct..(a + 1) * ct].iter().sum();
                worst = worst.max((row - self.vertex[s][a]).abs());
            }
            for b in 0..ct {
                let col: f64 = (0..cs).map(|a| table[a * ct + b]).sum();
                worst = worst.max((col - self.vertex[t][b]).abs());
            }
        }
        worst
    }

    /// Largest absolute entry-wise difference over all tables (and ln Z when
    /// both sides carry it).
    pub fn max_abs_diff(&self, other: &MarginalSet) -> f64 {
        let tables = self
            .vertex
            .iter()
            .zip(&other.vertex)
            .chain(self.edge.iter().zip(&other.edge));
        let mut worst: f64 = 0.0;
        for (a, b) in tables {
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).abs());
            }
        }
        if let (Some(a), Some(b)) = (self.log_partition, other.log_partition) {
            worst = worst.max((a - b).abs());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_tables_are_normalized_and_consistent() {
        let g = GraphStructure::new(vec![2, 3, 4], vec![(0, 1), (1, 2)]).unwrap();
        let m = MarginalSet::uniform(&g);
        assert!(m.normalization_error().unwrap() < 1e-15);
        assert!(m.consistency_error(&g) < 1e-15);
    }

    #[test]
    fn normalization_flags_negative_entries() {
        let m = MarginalSet {
            vertex: vec![vec![1.5, -0.5]],
            edge: vec![],
            log_partition: None,
        };
        assert_eq!(m.normalization_error(), None);
    }
}
