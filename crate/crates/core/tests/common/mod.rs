#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::{Mutex, MutexGuard};

use carelabel::checks::ComplexityClass;
use carelabel::inference::Backend;
use carelabel::mrf::{gibbs_sample, DiscreteMRF, GibbsConfig, GraphStructure, SampleSet, WeightInit};
use carelabel::training::{negative_avg_log_likelihood, nll_gradient};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

/// Serializes tests whose timings or pass bits depend on having the CPU.
pub fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

pub fn star(leaves: usize, cardinality: usize) -> GraphStructure {
    GraphStructure::new(vec![cardinality; leaves + 1], (1..=leaves).map(|v| (0, v)).collect()).unwrap()
}

/// Random tree on `n` vertices: vertex `v > 0` attaches to `parents[v - 1] % v`.
pub fn tree(cards: Vec<usize>, parents: &[usize]) -> GraphStructure {
    let edges = (1..cards.len()).map(|v| (parents[v - 1] % v, v)).collect();
    GraphStructure::new(cards, edges).unwrap()
}

/// Chains, stars and grids up to 3×4, binary or ternary.
pub fn small_graph() -> impl Strategy<Value = GraphStructure> {
    prop_oneof![
        (2usize..=8, 2usize..=3).prop_map(|(n, k)| GraphStructure::chain(n, k).unwrap()),
        (2usize..=6, 2usize..=3).prop_map(|(n, k)| star(n, k)),
        (1usize..=3, 2usize..=4, 2usize..=3).prop_map(|(r, c, k)| GraphStructure::grid(r, c, k).unwrap()),
    ]
}

/// Random trees and forests with mixed cardinalities.
pub fn acyclic_graph() -> impl Strategy<Value = GraphStructure> {
    prop_oneof![
        (2usize..=9)
            .prop_flat_map(|n| (
                prop::collection::vec(2usize..=3, n),
                prop::collection::vec(0usize..100, n - 1)
            ))
            .prop_map(|(cards, parents)| tree(cards, &parents)),
        (2usize..=8, 2usize..=3).prop_map(|(n, k)| GraphStructure::chain(n, k).unwrap()),
        (2usize..=6, 2usize..=3).prop_map(|(n, k)| star(n, k)),
        // two disjoint chains
        (2usize..=4, 2usize..=4).prop_map(|(a, b)| {
            let mut edges: Vec<_> = (1..a).map(|v| (v - 1, v)).collect();
            edges.extend((a + 1..a + b).map(|v| (v - 1, v)));
            GraphStructure::new(vec![2; a + b], edges).unwrap()
        }),
    ]
}

/// Small graphs with cycles and mixed cardinalities.
pub fn cyclic_graph() -> impl Strategy<Value = GraphStructure> {
    (3usize..=7)
        .prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|s| (s + 1..n).map(move |t| (s, t))).collect();
            let m = pairs.len();
            (
                prop::collection::vec(2usize..=3, n),
                Just(pairs),
                prop::collection::vec(any::<bool>(), m),
            )
        })
        .prop_map(|(cards, pairs, keep)| {
            let edges = pairs
                .into_iter()
                .zip(keep)
                .filter(|(_, k)| *k)
                .map(|(e, _)| e)
                .collect();
            GraphStructure::new(cards, edges).unwrap()
        })
}

pub fn model(graph: GraphStructure, scale: f64, seed: u64) -> DiscreteMRF {
    DiscreteMRF::with_init(
        graph,
        WeightInit::SeededUniform {
            lo: -scale,
            hi: scale,
            seed,
        },
    )
    .unwrap()
}

/// Every assignment of `cards`, last vertex fastest.
pub fn assignments(cards: &[usize]) -> Vec<Vec<usize>> {
    let mut all = vec![vec![]];
    for &k in cards {
        all = all
            .into_iter()
            .flat_map(|prefix| {
                (0..k).map(move |x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    all
}

/// Independent enumeration: (ln Z, vertex marginals, edge marginals).
pub fn enumerate(mrf: &DiscreteMRF) -> (f64, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let g = mrf.graph();
    let cards = g.cardinalities().to_vec();
    let xs = assignments(&cards);
    let scores: Vec<f64> = xs
        .iter()
        .map(|x| {
            let mut s: f64 = (0..cards.len()).map(|v| mrf.vertex_weights()[v][x[v]]).sum();
            for (e, &(a, b)) in g.edges().iter().enumerate() {
                s += mrf.edge_weights()[e][x[a] * cards[b] + x[b]];
            }
            s
        })
        .collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
    let mut vertex: Vec<Vec<f64>> = cards.iter().map(|&k| vec![0.0; k]).collect();
    let mut edge: Vec<Vec<f64>> = g.edges().iter().map(|&(a, b)| vec![0.0; cards[a] * cards[b]]).collect();
    for (x, s) in xs.iter().zip(&scores) {
        let p = (s - max).exp() / z;
        for v in 0..cards.len() {
            vertex[v][x[v]] += p;
        }
        for (e, &(a, b)) in g.edges().iter().enumerate() {
            edge[e][x[a] * cards[b] + x[b]] += p;
        }
    }
    (max + z.ln(), vertex, edge)
}

pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| {
            assert_eq!(x.len(), y.len());
            x.iter().zip(y).map(|(p, q)| (p - q).abs())
        })
        .fold(0.0, f64::max)
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("golden")
        .join(name)
}

/// Compares `actual` with the stored golden file. Setting
/// `CARELABEL_BLESS=1` rewrites the file instead.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = golden_path(name);
    if std::env::var("CARELABEL_BLESS").as_deref() == Ok("1") {
        std::fs::write(&path, actual).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        let line = expected
            .lines()
            .zip(actual.lines())
            .position(|(a, b)| a != b)
            .map_or_else(|| "length".to_string(), |i| format!("line {}", i + 1));
        Err(format!("{name} differs from golden at {line}"))
    }
}

/// Independent copy of the candidate growth functions.
pub fn growth(class: ComplexityClass, n: f64) -> f64 {
    match class {
        ComplexityClass::Constant => 1.0,
        ComplexityClass::Linear => n,
        ComplexityClass::Linearithmic => n * n.ln(),
        ComplexityClass::Quadratic => n.powi(2),
        ComplexityClass::Cubic => n.powi(3),
        ComplexityClass::Exponential => 2f64.powf(n),
    }
}

/// y(n) = a·f(n)·(1 + u), u uniform in ±5%, n = 2..10.
pub fn synthetic(class: ComplexityClass, seed: u64) -> Vec<(u64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = rng.gen_range(0.1..10.0);
    (2..=10u64)
        .map(|n| (n, a * growth(class, n as f64) * (1.0 + rng.gen_range(-0.05..0.05))))
        .collect()
}

pub fn nll(mrf: &DiscreteMRF, samples: &SampleSet) -> f64 {
    negative_avg_log_likelihood(mrf, samples, &Backend::jt()).unwrap().nll
}

pub fn data(g: &GraphStructure, seed: u64) -> SampleSet {
    let truth = model(g.clone(), 1.0, seed.wrapping_add(1000));
    gibbs_sample(
        &truth,
        &GibbsConfig {
            samples: 300,
            burn_in: 100,
            thinning: 1,
            seed,
        },
    )
    .unwrap()
}

/// Central differences over every weight, entry-wise relative error.
pub fn max_fd_relative_error(mrf: &DiscreteMRF, samples: &SampleSet, h: f64) -> f64 {
    let grad = nll_gradient(mrf, samples, &Backend::jt()).unwrap();
    let vw = mrf.vertex_weights().to_vec();
    let ew = mrf.edge_weights().to_vec();
    let mut worst: f64 = 0.0;
    let mut compare = |fd: f64, g: f64| worst = worst.max((fd - g).abs() / g.abs().max(1e-6));
    for v in 0..vw.len() {
        for k in 0..vw[v].len() {
            let (mut plus, mut minus) = (vw.clone(), vw.clone());
            plus[v][k] += h;
            minus[v][k] -= h;
            let fp = nll(&mrf.with_weights(plus, ew.clone()).unwrap(), samples);
            let fm = nll(&mrf.with_weights(minus, ew.clone()).unwrap(), samples);
            compare((fp - fm) / (2.0 * h), grad.vertex[v][k]);
        }
    }
    for e in 0..ew.len() {
        for k in 0..ew[e].len() {
            let (mut plus, mut minus) = (ew.clone(), ew.clone());
            plus[e][k] += h;
            minus[e][k] -= h;
            let fp = nll(&mrf.with_weights(vw.clone(), plus).unwrap(), samples);
            let fm = nll(&mrf.with_weights(vw.clone(), minus).unwrap(), samples);
            compare((fp - fm) / (2.0 * h), grad.edge[e][k]);
        }
    }
    worst
}
