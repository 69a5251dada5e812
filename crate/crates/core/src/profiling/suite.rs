use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mrf::{build_grid_mrf, gibbs_sample, DiscreteMRF, GibbsConfig, SampleSet, WeightInit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteParams {
    pub seed: u64,
    pub max_side: usize,
    pub samples_per_size: usize,
    /// Per-edge agreement couplings are drawn uniformly from `[lo, hi)`.
    pub coupling_range: (f64, f64),
    /// Vertex table entries are drawn uniformly from this range; a nonzero
    /// field keeps message passing away from the symmetric fixed point.
    pub field_range: (f64, f64),
    pub cardinality: usize,
}

pub const DEFAULT_FIELD_RANGE: (f64, f64) = (-0.25, 0.25);

impl SuiteParams {
    pub fn new(seed: u64, max_side: usize, samples_per_size: usize, coupling_range: (f64, f64)) -> Self {
        SuiteParams {
            seed,
            max_side,
            samples_per_size,
            coupling_range,
            field_range: DEFAULT_FIELD_RANGE,
            cardinality: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEntry {
    pub side: usize,
    pub model: DiscreteMRF,
    pub samples: SampleSet,
}

impl SuiteEntry {
    pub fn id(&self) -> String {
        format!("grid{0}x{0}", self.side)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfilingSuite {
    pub params: SuiteParams,
    pub entries: Vec<SuiteEntry>,
}

impl ProfilingSuite {
    pub fn seed(&self) -> u64 {
        self.params.seed
    }

    pub fn cardinality(&self) -> usize {
        self.params.cardinality
    }
}

pub fn generate_profiling_suite(
    seed: u64,
    max_side: usize,
    samples_per_size: usize,
    coupling_range: (f64, f64),
) -> Result<ProfilingSuite> {
    generate_profiling_suite_with(SuiteParams::new(seed, max_side, samples_per_size, coupling_range))
}

/// One n×n grid per side n in `2..=max_side`. Per-side seeds come from a
/// single stream in side order, so a side's entry does not depend on
/// `max_side`.
pub fn generate_profiling_suite_with(params: SuiteParams) -> Result<ProfilingSuite> {
    if params.max_side < 2 {
        return Err(Error::InvalidArgument(format!(
            "max_side must be at least 2, got {}",
            params.max_side
        )));
    }
    if params.samples_per_size == 0 {
        return Err(Error::InvalidArgument("samples_per_size must be positive".into()));
    }
    for (name, (lo, hi)) in [("coupling", params.coupling_range), ("field", params.field_range)] {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidArgument(format!("invalid {name} range ({lo}, {hi})")));
        }
    }
    let mut seeds = ChaCha8Rng::seed_from_u64(params.seed);
    let mut entries = Vec::with_capacity(params.max_side - 1);
    for side in 2..=params.max_side {
        let model_seed: u64 = seeds.gen();
        let sample_seed: u64 = seeds.gen();
        let model = build_grid_mrf(
            side,
            side,
            params.cardinality,
            WeightInit::SeededCoupling {
                coupling: params.coupling_range,
                field: params.field_range,
                seed: model_seed,
            },
        )?;
        let samples = gibbs_sample(&model, &GibbsConfig::new(params.samples_per_size, sample_seed))?;
        entries.push(SuiteEntry { side, model, samples });
    }
    Ok(ProfilingSuite { params, entries })
}
