//! Exact quantities by enumerating the joint state space. These are the
//! reference oracles for every inference backend.

use super::graph::GraphStructure;
use super::marginals::MarginalSet;
use super::model::DiscreteMRF;
use crate::error::{Error, Result};

/// Default cap on the number of joint configurations enumerated.
pub const ENUMERATION_CAP: u64 = 1 << 24;

/// Mixed-radix odometer over all joint assignments, vertex 0 fastest.
pub(crate) struct Assignments<'a> {
    cards: &'a [usize],
    current: Vec<usize>,
    done: bool,
}

impl<'a> Assignments<'a> {
    pub(crate) fn new(cards: &'a [usize]) -> Self {
        Assignments {
            cards,
            current: vec![0; cards.len()],
            done: false,
        }
    }

    pub(crate) fn current(&self) -> Option<&[usize]> {
        (!self.done).then_some(self.current.as_slice())
    }

    pub(crate) fn advance(&mut self) {
        for (v, x) in self.current.iter_mut().enumerate() {
            *x += 1;
            if *x < self.cards[v] {
                return;
            }
            *x = 0;
        }
        self.done = true;
    }
}

fn check_cap(graph: &GraphStructure, cap: u64) -> Result<()> {
    let n = graph.state_space_size();
    if n > cap as u128 {
        return Err(Error::EnumerationCapExceeded { configurations: n, cap });
    }
    Ok(())
}

/// ln Z by exhaustive enumeration with streaming log-sum-exp.
pub fn partition_function_bruteforce(mrf: &DiscreteMRF) -> Result<f64> {
    partition_function_bruteforce_capped(mrf, ENUMERATION_CAP)
}

pub fn partition_function_bruteforce_capped(mrf: &DiscreteMRF, cap: u64) -> Result<f64> {
    check_cap(mrf.graph(), cap)?;
    let mut it = Assignments::new(mrf.graph().cardinalities());
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    while let Some(x) = it.current() {
        let s = mrf.score_unchecked(x);
        if s > max {
            sum = sum * (max - s).exp() + 1.0;
            max = s;
        } else {
            sum += (s - max).exp();
        }
        it.advance();
    }
    Ok(max + sum.ln())
}

/// Exact vertex and edge marginals together with ln Z.
pub fn marginals_bruteforce(mrf: &DiscreteMRF) -> Result<MarginalSet> {
    marginals_bruteforce_capped(mrf, ENUMERATION_CAP)
}

pub fn marginals_bruteforce_capped(mrf: &DiscreteMRF, cap: u64) -> Result<MarginalSet> {
    let log_z = partition_function_bruteforce_capped(mrf, cap)?;
    let graph = mrf.graph();
    let mut out = MarginalSet {
        vertex: graph.cardinalities().iter().map(|&c| vec![0.0; c]).collect(),
        edge: (0..graph.edge_count())
            .map(|e| vec![0.0; graph.edge_table_len(e)])
            .collect(),
        log_partition: Some(log_z),
    };
    let mut it = Assignments::new(graph.cardinalities());
    while let Some(x) = it.current() {
        let p = (mrf.score_unchecked(x) - log_z).exp();
        for (v, &k) in x.iter().enumerate() {
            out.vertex[v][k] += p;
        }
        for (e, &(s, t)) in graph.edges().iter().enumerate() {
            out.edge[e][x[s] * graph.cardinality(t) + x[t]] += p;
        }
        it.advance();
    }
    Ok(out)
}
