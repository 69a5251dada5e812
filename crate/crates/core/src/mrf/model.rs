use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::GraphStructure;
use crate::error::{Error, Result};

/// Pairwise discrete MRF in log-linear form.
///
/// The potential of a vertex or edge factor is `exp(weight)`, so
/// `P(x) ∝ exp(Σ_v θ_v[x_v] + Σ_(s,t) θ_st[x_s, x_t])`. Edge tables are
/// row-major over `(x_s, x_t)` with `s < t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct DiscreteMRF {
    graph: GraphStructure,
    vertex_weights: Vec<Vec<f64>>,
    edge_weights: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    graph: GraphStructure,
    vertex_weights: Vec<Vec<f64>>,
    edge_weights: Vec<Vec<f64>>,
}

impl TryFrom<RawModel> for DiscreteMRF {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        DiscreteMRF::new(raw.graph, raw.vertex_weights, raw.edge_weights)
    }
}

impl From<DiscreteMRF> for RawModel {
    fn from(m: DiscreteMRF) -> Self {
        RawModel {
            graph: m.graph,
            vertex_weights: m.vertex_weights,
            edge_weights: m.edge_weights,
        }
    }
}

/// How to fill the weight tables of a freshly built model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightInit {
    Zeros,
    /// Every vertex and edge table entry drawn uniformly from `[lo, hi)`.
    SeededUniform {
        lo: f64,
        hi: f64,
        seed: u64,
    },
    /// Vertex table entries drawn uniformly from `field`; each edge gets one
    /// agreement coupling `c` drawn uniformly from `coupling`, so that
    /// `θ_st(x_s, x_t) = c·[x_s = x_t]`.
    SeededCoupling {
        coupling: (f64, f64),
        field: (f64, f64),
        seed: u64,
    },
}

impl DiscreteMRF {
    pub fn new(graph: GraphStructure, vertex_weights: Vec<Vec<f64>>, edge_weights: Vec<Vec<f64>>) -> Result<Self> {
        if vertex_weights.len() != graph.vertex_count() {
            return Err(Error::InvalidModel(format!(
                "{} vertex tables for {} vertices",
                vertex_weights.len(),
                graph.vertex_count()
            )));
        }
        if edge_weights.len() != graph.edge_count() {
            return Err(Error::InvalidModel(format!(
                "{} edge tables for {} edges",
                edge_weights.len(),
                graph.edge_count()
            )));
        }
        for (v, table) in vertex_weights.iter().enumerate() {
            if table.len() != graph.cardinality(v) {
                return Err(Error::InvalidModel(format!(
                    "vertex {v} table has {} entries, expected {}",
                    table.len(),
                    graph.cardinality(v)
                )));
            }
            if table.iter().any(|w| !w.is_finite()) {
                return Err(Error::InvalidModel(format!("vertex {v} table has a non-finite weight")));
            }
        }
        for (e, table) in edge_weights.iter().enumerate() {
            if table.len() != graph.edge_table_len(e) {
                let (s, t) = graph.edges()[e];
                return Err(Error::InvalidModel(format!(
                    "edge ({s}, {t}) table has {} entries, expected {}",
                    table.len(),
                    graph.edge_table_len(e)
                )));
            }
            if table.iter().any(|w| !w.is_finite()) {
                let (s, t) = graph.edges()[e];
                return Err(Error::InvalidModel(format!(
                    "edge ({s}, {t}) table has a non-finite weight"
                )));
            }
        }
        Ok(DiscreteMRF {
            graph,
            vertex_weights,
            edge_weights,
        })
    }

    pub fn with_init(graph: GraphStructure, init: WeightInit) -> Result<Self> {
        let vertex_shapes: Vec<usize> = graph.cardinalities().to_vec();
        let edge_shapes: Vec<usize> = (0..graph.edge_count()).map(|e| graph.edge_table_len(e)).collect();
        let (vw, ew) = match init {
            WeightInit::Zeros => (
                vertex_shapes.iter().map(|&n| vec![0.0; n]).collect(),
                edge_shapes.iter().map(|&n| vec![0.0; n]).collect(),
            ),
            WeightInit::SeededUniform { lo, hi, seed } => {
                check_range(lo, hi)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut draw = |n: usize| -> Vec<f64> {
                    (0..n)
                        .map(|_| if lo == hi { lo } else { rng.gen_range(lo..hi) })
                        .collect()
                };
                let vw: Vec<Vec<f64>> = vertex_shapes.iter().map(|&n| draw(n)).collect();
                let ew: Vec<Vec<f64>> = edge_shapes.iter().map(|&n| draw(n)).collect();
                (vw, ew)
            }
            WeightInit::SeededCoupling { coupling, field, seed } => {
                let (lo, hi) = coupling;
                check_range(lo, hi)?;
                check_range(field.0, field.1)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let vw = vertex_shapes
                    .iter()
                    .map(|&n| (0..n).map(|_| uniform(&mut rng, field)).collect())
                    .collect();
                let ew = graph
                    .edges()
                    .iter()
                    .map(|&(s, t)| {
                        let c = uniform(&mut rng, coupling);
                        let ct = graph.cardinality(t);
                        (0..graph.cardinality(s) * ct)
                            .map(|i| if i / ct == i % ct { c } else { 0.0 })
                            .collect()
                    })
                    .collect();
                (vw, ew)
            }
        };
        DiscreteMRF::new(graph, vw, ew)
    }

    pub fn zeros(graph: GraphStructure) -> Self {
        Self::with_init(graph, WeightInit::Zeros).expect("zero weights are always valid")
    }

    pub fn graph(&self) -> &GraphStructure {
        &self.graph
    }

    pub fn vertex_weights(&self) -> &[Vec<f64>] {
        &self.vertex_weights
    }

    pub fn edge_weights(&self) -> &[Vec<f64>] {
        &self.edge_weights
    }

    /// θ_st[x_s, x_t] for edge `e`.
    #[inline]
    pub fn edge_weight(&self, e: usize, xs: usize, xt: usize) -> f64 {
        let t = self.graph.edges()[e].1;
        self.edge_weights[e][xs * self.graph.cardinality(t) + xt]
    }

    /// Σ_v θ_v[x_v] + Σ_(s,t) θ_st[x_s, x_t], i.e. the log of the unnormalized
    /// joint density.
    pub fn unnormalized_log_score(&self, x: &[usize]) -> Result<f64> {
        self.graph.validate_assignment(x)?;
        Ok(self.score_unchecked(x))
    }

    pub(crate) fn score_unchecked(&self, x: &[usize]) -> f64 {
        let mut s: f64 = x.iter().zip(&self.vertex_weights).map(|(&k, table)| table[k]).sum();
        for (e, &(a, b)) in self.graph.edges().iter().enumerate() {
            s += self.edge_weight(e, x[a], x[b]);
        }
        s
    }

    /// Same graph with replaced weights; shapes are re-validated.
    pub fn with_weights(&self, vertex_weights: Vec<Vec<f64>>, edge_weights: Vec<Vec<f64>>) -> Result<Self> {
        DiscreteMRF::new(self.graph.clone(), vertex_weights, edge_weights)
    }

    /// Adds `offset` to every entry of vertex `v`'s table.
    pub fn with_vertex_offset(&self, v: usize, offset: f64) -> Result<Self> {
        if v >= self.graph.vertex_count() {
            return Err(Error::InvalidArgument(format!("vertex {v} out of range")));
        }
        let mut vw = self.vertex_weights.clone();
        vw[v].iter_mut().for_each(|w| *w += offset);
        self.with_weights(vw, self.edge_weights.clone())
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

fn check_range(lo: f64, hi: f64) -> Result<()> {
    if lo.is_finite() && hi.is_finite() && lo <= hi {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "uniform weight range [{lo}, {hi}) is invalid"
        )))
    }
}

/// Grid-structured MRF with `rows * cols` vertices of equal cardinality.
pub fn build_grid_mrf(rows: usize, cols: usize, cardinality: usize, init: WeightInit) -> Result<DiscreteMRF> {
    let graph = GraphStructure::grid(rows, cols, cardinality)?;
    DiscreteMRF::with_init(graph, init)
}
