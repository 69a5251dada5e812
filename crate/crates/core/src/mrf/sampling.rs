use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::graph::GraphStructure;
use super::marginals::MarginalSet;
use super::model::DiscreteMRF;
use crate::error::{Error, Result};

/// N joint assignments over a fixed graph, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    graph: GraphStructure,
    states: Vec<usize>,
}

impl SampleSet {
    pub fn new(graph: GraphStructure, rows: Vec<Vec<usize>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument(
                "sample set must contain at least one row".into(),
            ));
        }
        let mut states = Vec::with_capacity(rows.len() * graph.vertex_count());
        for (i, row) in rows.iter().enumerate() {
            graph
                .validate_assignment(row)
                .map_err(|e| Error::InvalidAssignment(format!("row {i}: {e}")))?;
            states.extend_from_slice(row);
        }
        Ok(SampleSet { graph, states })
    }

    pub fn graph(&self) -> &GraphStructure {
        &self.graph
    }

    pub fn len(&self) -> usize {
        self.states.len() / self.graph.vertex_count()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        let d = self.graph.vertex_count();
        &self.states[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[usize]> {
        self.states.chunks_exact(self.graph.vertex_count())
    }
}

/// Single-site Gibbs sampler settings.
///
/// Sweeps visit vertices in index order. The first `burn_in` sweeps are
/// discarded; afterwards every `thinning`-th sweep is kept until `samples`
/// rows are collected. The generator is ChaCha8 seeded via
/// `seed_from_u64`, so output is identical across platforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GibbsConfig {
    pub samples: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
}

impl GibbsConfig {
    pub const DEFAULT_BURN_IN: usize = 1000;

    pub fn new(samples: usize, seed: u64) -> Self {
        GibbsConfig {
            samples,
            burn_in: Self::DEFAULT_BURN_IN,
            thinning: 1,
            seed,
        }
    }
}

pub fn gibbs_sample(mrf: &DiscreteMRF, config: &GibbsConfig) -> Result<SampleSet> {
    if config.samples == 0 {
        return Err(Error::InvalidArgument("number of samples must be at least 1".into()));
    }
    if config.thinning == 0 {
        return Err(Error::InvalidArgument("thinning must be at least 1".into()));
    }
    let graph = mrf.graph();
    let d = graph.vertex_count();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut x: Vec<usize> = graph.cardinalities().iter().map(|&c| rng.gen_range(0..c)).collect();
    let mut logits = vec![0.0; graph.max_cardinality()];

    let mut sweep = |x: &mut Vec<usize>, rng: &mut ChaCha8Rng| {
        for v in 0..d {
            let card = graph.cardinality(v);
            let logits = &mut logits[..card];
            logits.copy_from_slice(&mrf.vertex_weights()[v]);
            for &(u, e) in graph.neighbors(v) {
                let (s, _) = graph.edges()[e];
                for (k, l) in logits.iter_mut().enumerate() {
                    *l += if s == v {
                        mrf.edge_weight(e, k, x[u])
                    } else {
                        mrf.edge_weight(e, x[u], k)
                    };
                }
            }
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for l in logits.iter_mut() {
                *l = (*l - max).exp();
                total += *l;
            }
            let mut r = rng.gen::<f64>() * total;
            let mut pick = card - 1;
            for (k, &w) in logits.iter().enumerate() {
                if r < w {
                    pick = k;
                    break;
                }
                r -= w;
            }
            x[v] = pick;
        }
    };

    for _ in 0..config.burn_in {
        sweep(&mut x, &mut rng);
    }
    let mut states = Vec::with_capacity(config.samples * d);
    while states.len() < config.samples * d {
        for _ in 0..config.thinning {
            sweep(&mut x, &mut rng);
        }
        states.extend_from_slice(&x);
    }
    Ok(SampleSet {
        graph: graph.clone(),
        states,
    })
}

/// Relative state frequencies per vertex and per edge; `log_partition` is
/// absent.
pub fn empirical_marginals(samples: &SampleSet) -> Result<MarginalSet> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty sample set".into()));
    }
    let graph = samples.graph();
    let mut vertex: Vec<Vec<u64>> = graph.cardinalities().iter().map(|&c| vec![0; c]).collect();
    let mut edge: Vec<Vec<u64>> = (0..graph.edge_count())
        .map(|e| vec![0; graph.edge_table_len(e)])
        .collect();
    for row in samples.rows() {
        for (v, &k) in row.iter().enumerate() {
            vertex[v][k] += 1;
        }
        for (e, &(s, t)) in graph.edges().iter().enumerate() {
            edge[e][row[s] * graph.cardinality(t) + row[t]] += 1;
        }
    }
    let n = samples.len() as f64;
    let to_freq = |counts: Vec<Vec<u64>>| -> Vec<Vec<f64>> {
        counts
            .into_iter()
            .map(|t| t.into_iter().map(|c| c as f64 / n).collect())
            .collect()
    };
    Ok(MarginalSet {
        vertex: to_freq(vertex),
        edge: to_freq(edge),
        log_partition: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrf::{build_grid_mrf, marginals_bruteforce, WeightInit};

    #[test]
    fn zero_weight_marginals_concentrate() {
        let m = build_grid_mrf(2, 3, 2, WeightInit::Zeros).unwrap();
        let n = 10_000;
        let samples = gibbs_sample(&m, &GibbsConfig::new(n, 11)).unwrap();
        assert_eq!(samples.len(), n);
        let mu = empirical_marginals(&samples).unwrap();
        let bound = 4.0 * (0.25 / n as f64).sqrt();
        for t in &mu.vertex {
            assert!((t[0] - 0.5).abs() < bound, "{t:?}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let m = build_grid_mrf(
            3,
            3,
            3,
            WeightInit::SeededUniform {
                lo: -1.0,
                hi: 1.0,
                seed: 3,
            },
        )
        .unwrap();
        let cfg = GibbsConfig {
            samples: 200,
            burn_in: 50,
            thinning: 3,
            seed: 99,
        };
        let a = gibbs_sample(&m, &cfg).unwrap();
        let b = gibbs_sample(&m, &cfg).unwrap();
        assert_eq!(a, b);
        let c = gibbs_sample(&m, &GibbsConfig { seed: 100, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn strongly_coupled_square_matches_exact_agreement() {
        let c = 2.0;
        let g = GraphStructure::grid(2, 2, 2).unwrap();
        let m = DiscreteMRF::new(g, vec![vec![0.0; 2]; 4], vec![vec![c, 0.0, 0.0, c]; 4]).unwrap();
        let exact = marginals_bruteforce(&m).unwrap();
        let samples = gibbs_sample(&m, &GibbsConfig::new(20_000, 2024)).unwrap();
        let emp = empirical_marginals(&samples).unwrap();
        for e in 0..4 {
            let agree_exact = exact.edge[e][0] + exact.edge[e][3];
            let agree_emp = emp.edge[e][0] + emp.edge[e][3];
            assert!(
                (agree_exact - agree_emp).abs() < 0.03,
                "edge {e}: {agree_exact} vs {agree_emp}"
            );
        }
    }

    #[test]
    fn rejects_invalid_config() {
        let m = build_grid_mrf(1, 2, 2, WeightInit::Zeros).unwrap();
        assert!(gibbs_sample(&m, &GibbsConfig::new(0, 1)).is_err());
        assert!(gibbs_sample(
            &m,
            &GibbsConfig {
                thinning: 0,
                ..GibbsConfig::new(5, 1)
            }
        )
        .is_err());
    }

    #[test]
    fn empirical_examples() {
        let g = GraphStructure::chain(2, 2).unwrap();
        let s = SampleSet::new(g.clone(), vec![vec![0, 1]]).unwrap();
        let mu = empirical_marginals(&s).unwrap();
        assert_eq!(mu.vertex, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(mu.edge, vec![vec![0.0, 1.0, 0.0, 0.0]]);
        assert_eq!(mu.log_partition, None);

        let s = SampleSet::new(g.clone(), vec![vec![1, 1]; 7]).unwrap();
        let mu = empirical_marginals(&s).unwrap();
        assert_eq!(mu.vertex, vec![vec![0.0, 1.0], vec![0.0, 1.0]]);

        let s = SampleSet::new(g.clone(), vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]).unwrap();
        let mu = empirical_marginals(&s).unwrap();
        assert_eq!(mu.vertex[0], vec![0.5, 0.5]);
        assert_eq!(mu.edge[0], vec![0.25; 4]);

        assert!(SampleSet::new(g.clone(), vec![]).is_err());
        assert!(SampleSet::new(g, vec![vec![0, 2]]).is_err());
    }
}
