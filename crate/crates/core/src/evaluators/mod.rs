//! Performance estimation backends.
//!
//! Every backend takes a decoded genotype plus the weights it inherited from
//! the shared weight set, runs one epoch of training from those weights, and
//! reports a validation loss together with the trained weights. Surrogate
//! backends skip training and score the genotype directly.

mod dataset;
pub mod micronet;
mod surrogate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search_space::{CellType, Genotype};
use crate::weight_store::{InheritedWeights, ShapeRegistry};

pub use dataset::{make_synthetic_dataset, DatasetSplit, Example};
pub use micronet::{MicroNet, MicroNetEvaluator, MicroRegistry};
pub use surrogate::{
    opcost_cell, surrogate_distance, surrogate_opcost, DistanceSurrogate, FrozenReduction,
    OpCostSurrogate, TabularSurrogate,
};

pub struct EstimationRequest<'a> {
    pub genotype: &'a Genotype,
    pub inherited: InheritedWeights,
    /// Drives the learning-rate schedule; the search passes the generation number.
    pub epoch_index: usize,
    /// Seed for the batch order of this one estimate.
    pub shuffle_seed: u64,
}

#[derive(Clone, Debug)]
pub struct EstimationResult {
    pub validation_loss: f64,
    pub trained: InheritedWeights,
}

/// The estimation contract shared by all backends.
pub trait Evaluator: Send + Sync {
    /// Parameter shapes this backend expects in the weight set.
    fn shape_registry(&self) -> &dyn ShapeRegistry;

    fn estimate(&self, req: EstimationRequest<'_>) -> Result<EstimationResult>;
}

impl<E: Evaluator + ?Sized> Evaluator for Box<E> {
    fn shape_registry(&self) -> &dyn ShapeRegistry {
        (**self).shape_registry()
    }

    fn estimate(&self, req: EstimationRequest<'_>) -> Result<EstimationResult> {
        (**self).estimate(req)
    }
}

pub(crate) fn finite(loss: f64) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::NonFiniteLoss(loss))
    }
}

/// Plain SGD settings with a cosine-annealed learning rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainHyper {
    pub lr0: f64,
    /// Schedule horizon; the search sets it to the generation count.
    pub t_max: usize,
    pub batch_size: usize,
    pub weight_decay: f64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper {
            lr0: 0.1,
            t_max: 50,
            batch_size: 64,
            weight_decay: 3e-4,
        }
    }
}

impl TrainHyper {
    /// `0.5 * lr0 * (1 + cos(pi * epoch / t_max))`, exactly zero from `t_max` on.
    pub fn learning_rate(&self, epoch: usize) -> f64 {
        if epoch >= self.t_max {
            return 0.0;
        }
        let phase = std::f64::consts::PI * epoch as f64 / self.t_max as f64;
        0.5 * self.lr0 * (1.0 + phase.cos())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr0 >= 0.0 && self.lr0.is_finite()) {
            return Err(Error::Config(format!("lr0 must be a non-negative number, got {}", self.lr0)));
        }
        if self.t_max == 0 || self.batch_size == 0 {
            return Err(Error::Config("t_max and batch_size must be positive".into()));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        Ok(())
    }
}

/// Stacking of cells into a network: `s` normal cells, a reduction cell,
/// `s` normal, a reduction, `s` normal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacroConfig {
    pub stacking: usize,
    /// Feature width; must be even so reduction cells can halve it.
    pub width: usize,
}

impl Default for MacroConfig {
    fn default() -> Self {
        MacroConfig {
            stacking: 2,
            width: 16,
        }
    }
}

impl MacroConfig {
    pub fn cell_count(&self) -> usize {
        3 * self.stacking + 2
    }

    pub fn cells(&self) -> Vec<CellType> {
        let mut cells = Vec::with_capacity(self.cell_count());
        for stage in 0..3 {
            cells.extend(std::iter::repeat_n(CellType::Normal, self.stacking));
            if stage < 2 {
                cells.push(CellType::Reduction);
            }
        }
        cells
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 2 || self.width % 2 != 0 {
            return Err(Error::Config(format!(
                "macro width must be even and at least 2, got {}",
                self.width
            )));
        }
        Ok(())
    }
}
