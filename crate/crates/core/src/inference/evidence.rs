use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mrf::DiscreteMRF;

/// Log-weight added to every non-evidence state of a clamped vertex.
pub const CLAMP_OFFSET: f64 = -1e9;

/// Soft clamping: returns a model over the same graph whose evidence
/// vertices carry `CLAMP_OFFSET` on all states other than the observed one,
/// so any inference backend yields the conditional distribution.
pub fn condition(mrf: &DiscreteMRF, evidence: &BTreeMap<usize, usize>) -> Result<DiscreteMRF> {
    let g = mrf.graph();
    let mut vw = mrf.vertex_weights().to_vec();
    for (&v, &state) in evidence {
        if v >= g.vertex_count() {
            return Err(Error::InvalidArgument(format!("evidence on unknown vertex {v}")));
        }
        if state >= g.cardinality(v) {
            return Err(Error::InvalidArgument(format!(
                "evidence state {state} out of range for vertex {v} with {} states",
                g.cardinality(v)
            )));
        }
        for (k, w) in vw[v].iter_mut().enumerate() {
            if k != state {
                *w += CLAMP_OFFSET;
            }
        }
    }
    mrf.with_weights(vw, mrf.edge_weights().to_vec())
}
