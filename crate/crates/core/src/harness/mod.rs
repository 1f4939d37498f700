//! Configuration, run drivers, logging, checkpoints and the baseline oracles
//! behind the `relnas` command line.

pub mod checkpoint;
pub mod config;
pub mod log;
pub mod oracles;
pub mod run;

use crate::error::{Error, Result};
use crate::evaluators::{
    make_synthetic_dataset, DistanceSurrogate, EstimationRequest, Evaluator, FrozenReduction,
    MicroNetEvaluator, OpCostSurrogate, TabularSurrogate,
};
use crate::rng;
use crate::search_space::{decode, random_arch, Block, CellGenotype, CellType, Genotype, OperationKind, SearchSpaceScheme};
use crate::slow_fast::GenerationStats;
use crate::weight_store::InheritedWeights;

pub use checkpoint::{checkpoint_file_name, latest_checkpoint, Checkpoint, CheckpointPayload};
pub use config::{ConfigOverrides, DatasetSection, EvaluatorKind, EvaluatorSection, RunConfig, SpaceSection};
pub use log::{read_log, LogRow, LogWriter, LOG_SCHEMA_VERSION};
pub use oracles::{random_search, EnumerationTable, RandomSearchResult, DEFAULT_PERCENTILES};
pub use run::{resume_search, run_search, RunOptions, RunSummary, BEST_FILE, LOG_FILE, SUMMARY_FILE};

/// Reduction cell used when the reduction cell is frozen: a chain of
/// `sep_conv_3x3` blocks, each fed twice by the node just before it.
pub fn fixed_reduction_cell(scheme: &SearchSpaceScheme) -> CellGenotype {
    let blocks = (0..scheme.blocks_per_cell())
        .map(|b| Block::new(b + 1, OperationKind::SepConv3, b + 1, OperationKind::SepConv3))
        .collect();
    CellGenotype::new(CellType::Reduction, blocks).expect("chain blocks are valid")
}

/// Target of the distance surrogate: the configured file, else a draw from
/// the seed's target stream.
pub fn distance_target(config: &RunConfig) -> Result<Genotype> {
    let scheme = config.scheme();
    let target = match &config.evaluator.target {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Genotype::from_json(&text)?
        }
        None => decode(&random_arch(&mut config.streams().rng(rng::TARGET), &scheme), &scheme)?,
    };
    if target.blocks_per_cell() != scheme.blocks_per_cell() {
        return Err(Error::SchemeMismatch(target.blocks_per_cell(), scheme.blocks_per_cell()));
    }
    Ok(target)
}

/// Everything a run derives from its config before the first generation.
pub struct Setup {
    pub scheme: SearchSpaceScheme,
    pub evaluator: Box<dyn Evaluator>,
    /// The pinned reduction cell, when the config freezes it.
    pub frozen: Option<CellGenotype>,
}

impl Setup {
    pub fn new(config: &RunConfig) -> Result<Self> {
        let scheme = config.scheme();
        let streams = config.streams();
        let evaluator: Box<dyn Evaluator> = match config.evaluator.kind {
            EvaluatorKind::Distance => Box::new(DistanceSurrogate {
                target: distance_target(config)?,
            }),
            EvaluatorKind::Opcost => Box::new(OpCostSurrogate),
            EvaluatorKind::Tabular => {
                let path = config.evaluator.table.as_ref().expect("validated");
                Box::new(TabularSurrogate::from_file(path)?)
            }
            EvaluatorKind::Micronet => {
                let d = &config.dataset;
                let data_seed = d.seed.unwrap_or_else(|| streams.seed_u64(rng::DATASET));
                let data = make_synthetic_dataset(data_seed, d.classes, config.macro_cfg.width, d.train_size, d.val_size);
                Box::new(MicroNetEvaluator::new(
                    config.macro_cfg.clone(),
                    config.train.clone(),
                    data,
                    streams.seed_u64(rng::PROJECTION_INIT),
                )?)
            }
        };
        let frozen = config.evaluator.frozen_reduction.then(|| fixed_reduction_cell(&scheme));
        let evaluator = match &frozen {
            Some(reduction) => Box::new(FrozenReduction {
                inner: evaluator,
                reduction: reduction.clone(),
            }),
            None => evaluator,
        };
        Ok(Setup {
            scheme,
            evaluator,
            frozen,
        })
    }

    /// `g` as the evaluator sees it (reduction cell pinned when frozen).
    pub fn present(&self, g: &Genotype) -> Genotype {
        match &self.frozen {
            Some(reduction) => Genotype::new(g.normal.clone(), reduction.clone()).expect("same scheme"),
            None => g.clone(),
        }
    }

    pub(crate) fn present_stats(&self, stats: &GenerationStats) -> GenerationStats {
        let mut shown = stats.clone();
        for r in &mut shown.records {
            r.genotype = self.present(&r.genotype);
        }
        shown
    }

    /// Loss of `g` under a genotype-only evaluator, exactly as the search
    /// would see it. Used by enumeration.
    pub fn surrogate_score(&self, config: &RunConfig, g: &Genotype) -> Result<f64> {
        if !config.evaluator.kind.is_surrogate() {
            return Err(Error::Config(
                "enumeration needs a surrogate evaluator; micronet losses depend on training".into(),
            ));
        }
        Ok(self
            .evaluator
            .estimate(EstimationRequest {
                genotype: g,
                inherited: InheritedWeights::default(),
                epoch_index: 1,
                shuffle_seed: 0,
            })?
            .validation_loss)
    }
}
