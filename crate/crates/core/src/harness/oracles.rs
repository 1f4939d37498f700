//! Baselines the search is judged against: equal-budget random search and
//! exhaustive enumeration of small spaces.

use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::evaluators::{EstimationRequest, Evaluator};
use crate::rng::{self, mix, SeedStreams};
use crate::search_space::{
    decode, enumerate_cells, enumerate_genotypes, random_arch, CellGenotype, CellType, Genotype,
    SearchSpaceScheme,
};
use crate::weight_store::WeightSet;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RandomSearchResult {
    pub budget: usize,
    pub best_loss: f64,
    /// Zero-based draw index of the best sample; the earliest wins ties.
    pub best_index: usize,
    pub best: Genotype,
}

/// Draws `budget` architectures uniformly from the random-search stream and
/// estimates each once from a freshly initialized weight set (no commits).
pub fn random_search(
    evaluator: &dyn Evaluator,
    scheme: &SearchSpaceScheme,
    budget: usize,
    streams: &SeedStreams,
) -> Result<RandomSearchResult> {
    let omega = WeightSet::init(scheme, evaluator.shape_registry(), &mut streams.rng(rng::OMEGA))?;
    let mut draws = streams.rng(rng::RANDOM_SEARCH);
    let shuffle_base = streams.seed_u64(rng::BATCH_SHUFFLE);
    let mut best: Option<(f64, usize, Genotype)> = None;
    for i in 0..budget {
        let genotype = decode(&random_arch(&mut draws, scheme), scheme)?;
        let loss = evaluator
            .estimate(EstimationRequest {
                genotype: &genotype,
                inherited: omega.inherit(&genotype),
                epoch_index: 1,
                shuffle_seed: mix(shuffle_base, &[u64::MAX, i as u64]),
            })?
            .validation_loss;
        if best.as_ref().is_none_or(|(b, _, _)| loss < *b) {
            best = Some((loss, i, genotype));
        }
    }
    let (best_loss, best_index, best) = best.expect("budget is positive");
    Ok(RandomSearchResult {
        budget,
        best_loss,
        best_index,
        best,
    })
}

/// Every genotype of a space with its loss, sorted ascending. Ties keep
/// enumeration order.
#[derive(Clone, Debug)]
pub struct EnumerationTable {
    rows: Vec<(f64, Genotype)>,
}

pub const DEFAULT_PERCENTILES: [f64; 6] = [0.1, 1.0, 5.0, 10.0, 25.0, 50.0];

impl EnumerationTable {
    /// Scores the full space, or only the normal cells when `frozen_reduction`
    /// pins the reduction cell.
    pub fn build(
        scheme: &SearchSpaceScheme,
        frozen_reduction: Option<&CellGenotype>,
        cap: u128,
        score: &dyn Fn(&Genotype) -> Result<f64>,
    ) -> Result<Self> {
        let mut rows = Vec::new();
        match frozen_reduction {
            Some(reduction) => {
                for normal in enumerate_cells(scheme, CellType::Normal, cap)? {
                    let g = Genotype::new(normal, reduction.clone())?;
                    rows.push((score(&g)?, g));
                }
            }
            None => {
                for g in enumerate_genotypes(scheme, cap)? {
                    rows.push((score(&g)?, g));
                }
            }
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(EnumerationTable { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[(f64, Genotype)] {
        &self.rows
    }

    pub fn optimum(&self) -> &(f64, Genotype) {
        &self.rows[0]
    }

    /// Loss of the last row inside the best `percent`% (at least one row).
    pub fn threshold(&self, percent: f64) -> f64 {
        let k = ((percent / 100.0) * self.rows.len() as f64).ceil() as usize;
        self.rows[k.clamp(1, self.rows.len()) - 1].0
    }

    /// Whether `loss` would rank inside the best `percent`%.
    pub fn in_top(&self, loss: f64, percent: f64) -> bool {
        loss <= self.threshold(percent)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["rank", "loss", "genotype"])?;
        for (rank, (loss, g)) in self.rows.iter().enumerate() {
            w.write_record([(rank + 1).to_string(), loss.to_string(), g.to_json()])?;
        }
        w.flush().map_err(|e| crate::error::Error::io(path, e))
    }
}
