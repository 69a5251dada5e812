//! Discrete pairwise Markov random fields: graph structure, log-linear
//! weights, brute-force reference computations and Gibbs sampling.

mod bruteforce;
mod graph;
pub mod io;
mod marginals;
mod model;
mod sampling;

#[cfg(test)]
pub(crate) use bruteforce::Assignments;
pub use bruteforce::{
    marginals_bruteforce, marginals_bruteforce_capped, partition_function_bruteforce,
    partition_function_bruteforce_capped, ENUMERATION_CAP,
};
pub(crate) use graph::DisjointSets;
pub use graph::GraphStructure;
pub use marginals::MarginalSet;
pub use model::{build_grid_mrf, DiscreteMRF, WeightInit};
pub use sampling::{empirical_marginals, gibbs_sample, GibbsConfig, SampleSet};
