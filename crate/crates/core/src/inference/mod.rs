//! Exact (junction tree) and approximate (loopy belief propagation)
//! marginal inference.

mod evidence;
mod junction_tree;
mod lbp;

use serde::{Deserialize, Serialize};

pub use evidence::{condition, CLAMP_OFFSET};
pub use junction_tree::{build_junction_tree, jt_infer, jt_infer_with, JtConfig, JunctionTree, TreeEdge};
pub use lbp::{bethe_log_partition, lbp_infer, LbpConfig};

use crate::error::{Error, Result};
use crate::mrf::{DiscreteMRF, GraphStructure, MarginalSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub marginals: MarginalSet,
    pub exact: bool,
    pub converged: bool,
    pub iterations_used: usize,
    /// Stored table entries: Σ_C Π_{v∈C}|X_v| for a junction tree,
    /// 2·Σ_(s,t)(|X_s| + |X_t|) for LBP.
    pub analytic_table_cells: u64,
}

/// Inference algorithm together with its settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Backend {
    JunctionTree(JtConfig),
    LoopyBp(LbpConfig),
}

impl Backend {
    pub fn jt() -> Self {
        Backend::JunctionTree(JtConfig::default())
    }

    pub fn lbp() -> Self {
        Backend::LoopyBp(LbpConfig::default())
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            Backend::JunctionTree(_) => "jt",
            Backend::LoopyBp(_) => "lbp",
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Backend::JunctionTree(_))
    }

    /// Builds whatever structure the backend reuses across calls on models
    /// sharing `graph`, and checks feasibility up front.
    pub fn prepare(&self, graph: &GraphStructure) -> Result<PreparedBackend> {
        let tree = match self {
            Backend::JunctionTree(cfg) => {
                let jt = build_junction_tree(graph);
                let largest = jt.max_clique_cells(graph);
                if largest > cfg.max_clique_cells as u128 {
                    return Err(Error::MemoryCapExceeded {
                        cells: largest,
                        cap: cfg.max_clique_cells,
                        width: jt.width(),
                    });
                }
                Some(jt)
            }
            Backend::LoopyBp(cfg) => {
                cfg.validate()?;
                None
            }
        };
        Ok(PreparedBackend {
            backend: *self,
            graph: graph.clone(),
            tree,
        })
    }
}

/// A backend bound to one graph structure.
#[derive(Debug, Clone)]
pub struct PreparedBackend {
    backend: Backend,
    graph: GraphStructure,
    tree: Option<JunctionTree>,
}

impl PreparedBackend {
    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn junction_tree(&self) -> Option<&JunctionTree> {
        self.tree.as_ref()
    }

    pub fn infer(&self, mrf: &DiscreteMRF) -> Result<InferenceReport> {
        if mrf.graph() != &self.graph {
            return Err(Error::InvalidArgument(
                "model graph differs from the prepared structure".into(),
            ));
        }
        match (&self.backend, &self.tree) {
            (Backend::JunctionTree(cfg), Some(jt)) => jt_infer_with(mrf, jt, cfg),
            (Backend::LoopyBp(cfg), _) => lbp_infer(mrf, cfg),
            (Backend::JunctionTree(_), None) => unreachable!("junction tree prepared eagerly"),
        }
    }

    /// ln Z from the backend: exact for the junction tree, Bethe for LBP.
    pub fn log_partition(&self, mrf: &DiscreteMRF, report: &InferenceReport) -> f64 {
        report
            .marginals
            .log_partition
            .unwrap_or_else(|| bethe_log_partition(mrf, &report.marginals))
    }
}

/// One-shot inference with `backend`.
pub fn infer(mrf: &DiscreteMRF, backend: &Backend) -> Result<InferenceReport> {
    backend.prepare(mrf.graph())?.infer(mrf)
}
