use std::collections::HashMap;
use std::path::Path;

use super::{finite, EstimationRequest, EstimationResult, Evaluator};
use crate::error::{Error, Result};
use crate::search_space::{CellGenotype, Genotype, OperationKind};
use crate::weight_store::{ParameterFree, ShapeRegistry};

/// Fraction of the `8 * B` gene slots whose discrete choice differs from `target`.
pub fn surrogate_distance(genotype: &Genotype, target: &Genotype) -> Result<f64> {
    let b = genotype.blocks_per_cell();
    if b != target.blocks_per_cell() {
        return Err(Error::SchemeMismatch(b, target.blocks_per_cell()));
    }
    let mismatches: usize = [
        (&genotype.normal, &target.normal),
        (&genotype.reduction, &target.reduction),
    ]
    .iter()
    .flat_map(|(c, t)| c.blocks.iter().zip(&t.blocks))
    .map(|(x, y)| {
        usize::from(x.pre1 != y.pre1)
            + usize::from(x.op1 != y.op1)
            + usize::from(x.pre2 != y.pre2)
            + usize::from(x.op2 != y.op2)
    })
    .sum();
    Ok(mismatches as f64 / (8 * b) as f64)
}

fn op_cost(op: OperationKind) -> f64 {
    match op {
        OperationKind::SepConv3 => 0.2,
        OperationKind::SepConv5 => 0.3,
        OperationKind::DilConv3 => 0.4,
        OperationKind::DilConv5 => 0.5,
        OperationKind::MaxPool3 | OperationKind::AvgPool3 => 0.8,
        OperationKind::Identity => 0.9,
    }
}

/// Mean op cost of one cell plus `0.1` times the fraction of predecessor
/// slots that skip the immediately preceding node.
pub fn opcost_cell(cell: &CellGenotype) -> f64 {
    let slots = 2 * cell.blocks.len();
    let (mut cost, mut skips) = (0.0, 0usize);
    for (b, block) in cell.blocks.iter().enumerate() {
        let previous = CellGenotype::node_of(b) - 1;
        cost += op_cost(block.op1) + op_cost(block.op2);
        skips += usize::from(block.pre1 != previous) + usize::from(block.pre2 != previous);
    }
    cost / slots as f64 + 0.1 * skips as f64 / slots as f64
}

/// [`opcost_cell`] taken over both cells (they have equal slot counts).
pub fn surrogate_opcost(genotype: &Genotype) -> f64 {
    0.5 * (opcost_cell(&genotype.normal) + opcost_cell(&genotype.reduction))
}

fn passthrough(req: EstimationRequest<'_>, loss: f64) -> Result<EstimationResult> {
    Ok(EstimationResult {
        validation_loss: finite(loss)?,
        trained: req.inherited,
    })
}

#[derive(Clone, Debug)]
pub struct DistanceSurrogate {
    pub target: Genotype,
}

impl Evaluator for DistanceSurrogate {
    fn shape_registry(&self) -> &dyn ShapeRegistry {
        &ParameterFree
    }

    fn estimate(&self, req: EstimationRequest<'_>) -> Result<EstimationResult> {
        let loss = surrogate_distance(req.genotype, &self.target)?;
        passthrough(req, loss)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct OpCostSurrogate;

impl Evaluator for OpCostSurrogate {
    fn shape_registry(&self) -> &dyn ShapeRegistry {
        &ParameterFree
    }

    fn estimate(&self, req: EstimationRequest<'_>) -> Result<EstimationResult> {
        let loss = surrogate_opcost(req.genotype);
        passthrough(req, loss)
    }
}

/// Looks losses up by canonical genotype JSON; unknown genotypes are errors.
#[derive(Clone, Debug, Default)]
pub struct TabularSurrogate {
    table: HashMap<String, f64>,
}

impl TabularSurrogate {
    pub fn new(table: HashMap<String, f64>) -> Self {
        TabularSurrogate { table }
    }

    /// Reads a JSON object mapping genotype JSON strings to losses. Keys are
    /// re-canonicalized so whitespace in the file does not matter.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: HashMap<String, f64> = serde_json::from_str(&text)?;
        let table = raw
            .into_iter()
            .map(|(k, v)| Ok((Genotype::from_json(&k)?.to_json(), v)))
            .collect::<Result<_>>()?;
        Ok(TabularSurrogate { table })
    }

    pub fn lookup(&self, genotype: &Genotype) -> Result<f64> {
        let key = genotype.to_json();
        self.table
            .get(&key)
            .copied()
            .ok_or(Error::MissingTableEntry(key))
    }
}

impl Evaluator for TabularSurrogate {
    fn shape_registry(&self) -> &dyn ShapeRegistry {
        &ParameterFree
    }

    fn estimate(&self, req: EstimationRequest<'_>) -> Result<EstimationResult> {
        let loss = self.lookup(req.genotype)?;
        passthrough(req, loss)
    }
}

/// Pins the reduction cell so only the normal cell is searched.
#[derive(Clone, Debug)]
pub struct FrozenReduction<E> {
    pub inner: E,
    pub reduction: CellGenotype,
}

impl<E: Evaluator> Evaluator for FrozenReduction<E> {
    fn shape_registry(&self) -> &dyn ShapeRegistry {
        self.inner.shape_registry()
    }

    fn estimate(&self, req: EstimationRequest<'_>) -> Result<EstimationResult> {
        let pinned = Genotype::new(req.genotype.normal.clone(), self.reduction.clone())?;
        self.inner.estimate(EstimationRequest {
            genotype: &pinned,
            ..req
        })
    }
}
