//! Synchronous (flooding) sum-product loopy belief propagation.

use serde::{Deserialize, Serialize};

use super::InferenceReport;
use crate::error::{Error, Result};
use crate::mrf::{DiscreteMRF, MarginalSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbpConfig {
    /// Iteration budget I.
    pub max_iterations: usize,
    /// Stop once the largest absolute message change falls below this.
    pub tolerance: f64,
    /// λ in `new = (1 - λ)·update + λ·old`.
    pub damping: f64,
}

impl Default for LbpConfig {
    fn default() -> Self {
        LbpConfig {
            max_iterations: 100,
            tolerance: 1e-8,
            damping: 0.0,
        }
    }
}

impl LbpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("LBP needs at least one iteration".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "LBP tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::InvalidArgument(format!(
                "LBP damping must lie in [0, 1), got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

/// Directed message layout: edge `e = (s, t)` owns message `2e` (s→t, over
/// the states of t) and `2e + 1` (t→s, over the states of s).
struct Layout {
    offset: Vec<usize>,
    len: Vec<usize>,
    total: usize,
}

impl Layout {
    fn new(mrf: &DiscreteMRF) -> Self {
        let g = mrf.graph();
        let mut offset = Vec::with_capacity(2 * g.edge_count());
        let mut len = Vec::with_capacity(2 * g.edge_count());
        let mut total = 0;
        for &(s, t) in g.edges() {
            for n in [g.cardinality(t), g.cardinality(s)] {
                offset.push(total);
                len.push(n);
                total += n;
            }
        }
        Layout { offset, len, total }
    }

    fn slice<'a>(&self, buf: &'a [f64], m: usize) -> &'a [f64] {
        &buf[self.offset[m]..self.offset[m] + self.len[m]]
    }
}

/// Index of the message flowing from `from` into its neighbor along edge `e`.
#[inline]
fn outgoing(mrf: &DiscreteMRF, e: usize, from: usize) -> usize {
    if mrf.graph().edges()[e].0 == from {
        2 * e
    } else {
        2 * e + 1
    }
}

fn exp_shifted(table: &[f64]) -> Vec<f64> {
    let max = table.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    table.iter().map(|w| (w - max).exp()).collect()
}

/// φ_v(x_v) · Π_{u ∈ N(v), u ≠ skip} m_{u→v}(x_v), written into `out`.
fn cavity(
    mrf: &DiscreteMRF,
    layout: &Layout,
    msgs: &[f64],
    node_pot: &[f64],
    v: usize,
    skip_edge: Option<usize>,
    out: &mut [f64],
) {
    out.copy_from_slice(node_pot);
    for &(u, e) in mrf.graph().neighbors(v) {
        if Some(e) == skip_edge {
            continue;
        }
        let m = layout.slice(msgs, outgoing(mrf, e, u));
        for (o, x) in out.iter_mut().zip(m) {
            *o *= x;
        }
    }
}

fn normalize_or_uniform(values: &mut [f64]) {
    let s: f64 = values.iter().sum();
    if s > 0.0 && s.is_finite() {
        values.iter_mut().for_each(|v| *v /= s);
    } else {
        let u = 1.0 / values.len() as f64;
        values.iter_mut().for_each(|v| *v = u);
    }
}

/// Approximate marginals by loopy belief propagation. Non-convergence is
/// reported through `converged`, never as an error.
pub fn lbp_infer(mrf: &DiscreteMRF, config: &LbpConfig) -> Result<InferenceReport> {
    config.validate()?;
    let g = mrf.graph();
    let layout = Layout::new(mrf);
    let node_pot: Vec<Vec<f64>> = mrf.vertex_weights().iter().map(|t| exp_shifted(t)).collect();
    let edge_pot: Vec<Vec<f64>> = mrf.edge_weights().iter().map(|t| exp_shifted(t)).collect();

    let mut msgs = vec![0.0; layout.total];
    for m in 0..layout.len.len() {
        let n = layout.len[m];
        msgs[layout.offset[m]..layout.offset[m] + n].fill(1.0 / n as f64);
    }
    let mut next = msgs.clone();
    let mut scratch = vec![0.0; g.max_cardinality()];

    let mut converged = false;
    let mut iterations_used = 0;
    for it in 1..=config.max_iterations {
        iterations_used = it;
        let mut change: f64 = 0.0;
        for (e, &(s, t)) in g.edges().iter().enumerate() {
            let (cs, ct) = (g.cardinality(s), g.cardinality(t));
            let pot = &edge_pot[e];

            // s → t
            let h = &mut scratch[..cs];
            cavity(mrf, &layout, &msgs, &node_pot[s], s, Some(e), h);
            let m = 2 * e;
            let out = &mut next[layout.offset[m]..layout.offset[m] + ct];
            out.fill(0.0);
            for (a, &ha) in h.iter().enumerate() {
                for (b, o) in out.iter_mut().enumerate() {
                    *o += ha * pot[a * ct + b];
                }
            }
            normalize_or_uniform(out);

            // t → s
            let h = &mut scratch[..ct];
            cavity(mrf, &layout, &msgs, &node_pot[t], t, Some(e), h);
            let m = 2 * e + 1;
            let out = &mut next[layout.offset[m]..layout.offset[m] + cs];
            for (a, o) in out.iter_mut().enumerate() {
                *o = h.iter().enumerate().map(|(b, &hb)| hb * pot[a * ct + b]).sum();
            }
            normalize_or_uniform(out);
        }
        for (new, old) in next.iter_mut().zip(&msgs) {
            if config.damping > 0.0 {
                *new = (1.0 - config.damping) * *new + config.damping * old;
            }
            change = change.max((*new - old).abs());
        }
        std::mem::swap(&mut msgs, &mut next);
        if change < config.tolerance {
            converged = true;
            break;
        }
    }

    let vertex: Vec<Vec<f64>> = (0..g.vertex_count())
        .map(|v| {
            let mut b = vec![0.0; g.cardinality(v)];
            cavity(mrf, &layout, &msgs, &node_pot[v], v, None, &mut b);
            normalize_or_uniform(&mut b);
            b
        })
        .collect();
    let edge: Vec<Vec<f64>> = g
        .edges()
        .iter()
        .enumerate()
        .map(|(e, &(s, t))| {
            let (cs, ct) = (g.cardinality(s), g.cardinality(t));
            let mut hs = vec![0.0; cs];
            let mut ht = vec![0.0; ct];
            cavity(mrf, &layout, &msgs, &node_pot[s], s, Some(e), &mut hs);
            cavity(mrf, &layout, &msgs, &node_pot[t], t, Some(e), &mut ht);
            let mut b: Vec<f64> = (0..cs * ct).map(|i| edge_pot[e][i] * hs[i / ct] * ht[i % ct]).collect();
            normalize_or_uniform(&mut b);
            b
        })
        .collect();

    let cells: usize = g
        .edges()
        .iter()
        .map(|&(s, t)| g.cardinality(s) + g.cardinality(t))
        .sum();
    Ok(InferenceReport {
        marginals: MarginalSet {
            vertex,
            edge,
            log_partition: None,
        },
        exact: false,
        converged,
        iterations_used,
        analytic_table_cells: 2 * cells as u64,
    })
}

/// Bethe approximation of ln Z assembled from vertex and edge beliefs:
/// `Σ b·θ + H_Bethe(b)` with `H_Bethe = Σ_e H(b_e) − Σ_v (deg(v) − 1)·H(b_v)`.
/// Exact when the graph is a forest and the beliefs are the true marginals.
pub fn bethe_log_partition(mrf: &DiscreteMRF, beliefs: &MarginalSet) -> f64 {
    let g = mrf.graph();
    let plogp = |p: f64| if p > 0.0 { p * p.ln() } else { 0.0 };
    let pw = |p: f64, w: f64| if p > 0.0 { p * w } else { 0.0 };
    let mut energy = 0.0;
    let mut neg_entropy = 0.0;
    for (v, b) in beliefs.vertex.iter().enumerate() {
        let w = &mrf.vertex_weights()[v];
        energy += b.iter().zip(w).map(|(&p, &w)| pw(p, w)).sum::<f64>();
        let deg = g.degree(v) as f64;
        neg_entropy -= (deg - 1.0) * b.iter().map(|&p| plogp(p)).sum::<f64>();
    }
    for (e, b) in beliefs.edge.iter().enumerate() {
        let w = &mrf.edge_weights()[e];
        energy += b.iter().zip(w).map(|(&p, &w)| pw(p, w)).sum::<f64>();
        neg_entropy += b.iter().map(|&p| plogp(p)).sum::<f64>();
    }
    energy - neg_entropy
}
