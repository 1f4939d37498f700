use serde::{Deserialize, Serialize};

use super::{CellType, OperationKind};
use crate::error::{Error, Result};

/// One intermediate node: two predecessor choices and one operation per edge.
///
/// Serialized as the JSON array `[pre1, op1_name, pre2, op2_name]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, OperationKind, usize, OperationKind)")]
#[serde(into = "(usize, OperationKind, usize, OperationKind)")]
pub struct Block {
    pub pre1: usize,
    pub op1: OperationKind,
    pub pre2: usize,
    pub op2: OperationKind,
}

impl Block {
    pub fn new(pre1: usize, op1: OperationKind, pre2: usize, op2: OperationKind) -> Self {
        Block {
            pre1,
            op1,
            pre2,
            op2,
        }
    }

    /// The two incoming edges as `(source, op)`.
    pub fn edges(&self) -> [(usize, OperationKind); 2] {
        [(self.pre1, self.op1), (self.pre2, self.op2)]
    }
}

impl From<(usize, OperationKind, usize, OperationKind)> for Block {
    fn from((pre1, op1, pre2, op2): (usize, OperationKind, usize, OperationKind)) -> Self {
        Block::new(pre1, op1, pre2, op2)
    }
}

impl From<Block> for (usize, OperationKind, usize, OperationKind) {
    fn from(b: Block) -> Self {
        (b.pre1, b.op1, b.pre2, b.op2)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CellGenotype {
    pub cell_type: CellType,
    pub blocks: Vec<Block>,
}

impl CellGenotype {
    pub fn new(cell_type: CellType, blocks: Vec<Block>) -> Result<Self> {
        let cell = CellGenotype { cell_type, blocks };
        cell.validate()?;
        Ok(cell)
    }

    /// Node index defined by block `b`.
    pub fn node_of(block: usize) -> usize {
        block + 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::InvalidGenotype(format!(
                "{} cell has no blocks",
                self.cell_type
            )));
        }
        for (b, block) in self.blocks.iter().enumerate() {
            let node = Self::node_of(b);
            for pre in [block.pre1, block.pre2] {
                if pre >= node {
                    return Err(Error::InvalidGenotype(format!(
                        "{} cell block {b}: predecessor {pre} is not below node {node}",
                        self.cell_type
                    )));
                }
            }
        }
        Ok(())
    }

    /// Every `(source, target, op)` edge, in block order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, OperationKind)> + '_ {
        self.blocks.iter().enumerate().flat_map(|(b, block)| {
            block
                .edges()
                .into_iter()
                .map(move |(src, op)| (src, Self::node_of(b), op))
        })
    }
}

/// A decoded architecture: one normal and one reduction cell.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GenotypeRepr", into = "GenotypeRepr")]
pub struct Genotype {
    pub normal: CellGenotype,
    pub reduction: CellGenotype,
}

#[derive(Serialize, Deserialize)]
struct GenotypeRepr {
    blocks_per_cell: usize,
    normal: Vec<Block>,
    reduction: Vec<Block>,
}

impl TryFrom<GenotypeRepr> for Genotype {
    type Error = Error;

    fn try_from(repr: GenotypeRepr) -> Result<Self> {
        if repr.normal.len() != repr.blocks_per_cell || repr.reduction.len() != repr.blocks_per_cell
        {
            return Err(Error::InvalidGenotype(format!(
                "blocks_per_cell is {} but cells hold {} and {} blocks",
                repr.blocks_per_cell,
                repr.normal.len(),
                repr.reduction.len()
            )));
        }
        Genotype::new(
            CellGenotype::new(CellType::Normal, repr.normal)?,
            CellGenotype::new(CellType::Reduction, repr.reduction)?,
        )
    }
}

impl From<Genotype> for GenotypeRepr {
    fn from(g: Genotype) -> Self {
        GenotypeRepr {
            blocks_per_cell: g.blocks_per_cell(),
            normal: g.normal.blocks,
            reduction: g.reduction.blocks,
        }
    }
}

impl Genotype {
    pub fn new(normal: CellGenotype, reduction: CellGenotype) -> Result<Self> {
        if normal.cell_type != CellType::Normal || reduction.cell_type != CellType::Reduction {
            return Err(Error::InvalidGenotype("cell types are swapped".into()));
        }
        if normal.blocks.len() != reduction.blocks.len() {
            return Err(Error::InvalidGenotype(format!(
                "normal cell has {} blocks, reduction cell has {}",
                normal.blocks.len(),
                reduction.blocks.len()
            )));
        }
        Ok(Genotype { normal, reduction })
    }

    pub fn blocks_per_cell(&self) -> usize {
        self.normal.blocks.len()
    }

    pub fn cell(&self, cell_type: CellType) -> &CellGenotype {
        match cell_type {
            CellType::Normal => &self.normal,
            CellType::Reduction => &self.reduction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.normal.validate()?;
        self.reduction.validate()
    }

    /// Compact JSON, the canonical textual form (also used as tabular key).
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("genotype serialization is infallible")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("genotype serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
