//! Cell-based search space and its interval encoding.
//!
//! A candidate architecture is a pair of cells (normal and reduction). Each
//! cell holds `B` blocks; block `b` defines intermediate node `b + 2` from two
//! predecessor nodes with lower index and one operation per incoming edge.
//! Nodes 0 and 1 are the cell inputs.
//!
//! The flat encoding assigns every node index and every operation a half-open
//! unit interval `[k, k + 1)`, so any real vector whose genes fall in range
//! decodes to exactly one genotype by flooring.

mod dag;
mod encoding;
mod enumerate;
mod genotype;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dag::{CellDag, DagEdge};
pub use encoding::{decode, encode, random_arch, validate, ArchVector, GeneViolation, ValidityReport};
pub use enumerate::{
    cell_space_size, enumerate_cells, enumerate_genotypes, genotype_space_size, CellIter,
    GenotypeIter, DEFAULT_ENUMERATION_CAP,
};
pub use genotype::{Block, CellGenotype, Genotype};

/// Candidate operations, ordered by their interval in operation-gene space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperationKind {
    MaxPool3,
    AvgPool3,
    Identity,
    SepConv3,
    SepConv5,
    DilConv3,
    DilConv5,
}

/// Coarse operation type, without the kernel size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpFamily {
    MaxPool,
    AvgPool,
    Identity,
    SepConv,
    DilConv,
}

impl OperationKind {
    pub const COUNT: usize = 7;

    pub const ALL: [OperationKind; Self::COUNT] = [
        OperationKind::MaxPool3,
        OperationKind::AvgPool3,
        OperationKind::Identity,
        OperationKind::SepConv3,
        OperationKind::SepConv5,
        OperationKind::DilConv3,
        OperationKind::DilConv5,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(ordinal: usize) -> Option<Self> {
        Self::ALL.get(ordinal).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            OperationKind::MaxPool3 => "max_pool_3x3",
            OperationKind::AvgPool3 => "avg_pool_3x3",
            OperationKind::Identity => "identity",
            OperationKind::SepConv3 => "sep_conv_3x3",
            OperationKind::SepConv5 => "sep_conv_5x5",
            OperationKind::DilConv3 => "dil_conv_3x3",
            OperationKind::DilConv5 => "dil_conv_5x5",
        }
    }

    pub fn family(self) -> OpFamily {
        match self {
            OperationKind::MaxPool3 => OpFamily::MaxPool,
            OperationKind::AvgPool3 => OpFamily::AvgPool,
            OperationKind::Identity => OpFamily::Identity,
            OperationKind::SepConv3 | OperationKind::SepConv5 => OpFamily::SepConv,
            OperationKind::DilConv3 | OperationKind::DilConv5 => OpFamily::DilConv,
        }
    }

    /// Kernel size; zero for the identity.
    pub fn kernel_size(self) -> usize {
        match self {
            OperationKind::Identity => 0,
            OperationKind::SepConv5 | OperationKind::DilConv5 => 5,
            _ => 3,
        }
    }

    /// Whether the operation owns trainable parameters.
    pub fn is_parameterized(self) -> bool {
        matches!(self.family(), OpFamily::SepConv | OpFamily::DilConv)
    }
}

impl fmt::Display for OperationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|op| op.name() == s)
            .ok_or_else(|| Error::InvalidGenotype(format!("unknown operation name {s:?}")))
    }
}

impl Serialize for OperationKind {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for OperationKind {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellType {
    Normal,
    Reduction,
}

impl CellType {
    pub const BOTH: [CellType; 2] = [CellType::Normal, CellType::Reduction];

    pub fn name(self) -> &'static str {
        match self {
            CellType::Normal => "normal",
            CellType::Reduction => "reduction",
        }
    }
}

impl fmt::Display for CellType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CellType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(CellType::Normal),
            "reduction" => Ok(CellType::Reduction),
            _ => Err(Error::InvalidGenotype(format!("unknown cell type {s:?}"))),
        }
    }
}

/// Half-open real interval `[lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, value: f64) -> bool {
        value >= self.lo && value < self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.lo, self.hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneRole {
    Predecessor,
    Operation,
}

/// Location of one gene inside the flat vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneSlot {
    pub cell: CellType,
    pub block: usize,
    pub role: GeneRole,
    /// 0 for the first edge of the block, 1 for the second.
    pub edge: usize,
}

/// Layout of the flat architecture vector.
///
/// Per block the genes are ordered `(pre1, op1, pre2, op2)`; all normal-cell
/// genes precede the reduction-cell genes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SearchSpaceScheme {
    blocks_per_cell: usize,
}

impl Default for SearchSpaceScheme {
    fn default() -> Self {
        SearchSpaceScheme { blocks_per_cell: 4 }
    }
}

impl SearchSpaceScheme {
    pub const GENES_PER_BLOCK: usize = 4;

    pub fn new(blocks_per_cell: usize) -> Result<Self> {
        if blocks_per_cell == 0 {
            return Err(Error::Config("blocks_per_cell must be positive".into()));
        }
        Ok(SearchSpaceScheme { blocks_per_cell })
    }

    pub fn blocks_per_cell(&self) -> usize {
        self.blocks_per_cell
    }

    pub fn ops_count(&self) -> usize {
        OperationKind::COUNT
    }

    pub fn genes_per_cell(&self) -> usize {
        Self::GENES_PER_BLOCK * self.blocks_per_cell
    }

    /// Total vector length, `8 * B`.
    pub fn len(&self) -> usize {
        2 * self.genes_per_cell()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn slot(&self, position: usize) -> GeneSlot {
        assert!(position < self.len(), "gene position {position} out of range");
        let cell = if position < self.genes_per_cell() {
            CellType::Normal
        } else {
            CellType::Reduction
        };
        let within = position % self.genes_per_cell();
        let block = within / Self::GENES_PER_BLOCK;
        let lane = within % Self::GENES_PER_BLOCK;
        GeneSlot {
            cell,
            block,
            role: if lane % 2 == 0 {
                GeneRole::Predecessor
            } else {
                GeneRole::Operation
            },
            edge: lane / 2,
        }
    }

    /// Position of a gene given its slot coordinates.
    pub fn position(&self, cell: CellType, block: usize, role: GeneRole, edge: usize) -> usize {
        let base = match cell {
            CellType::Normal => 0,
            CellType::Reduction => self.genes_per_cell(),
        };
        let lane = edge * 2 + usize::from(role == GeneRole::Operation);
        base + block * Self::GENES_PER_BLOCK + lane
    }

    pub fn interval(&self, position: usize) -> Interval {
        let slot = self.slot(position);
        let hi = match slot.role {
            GeneRole::Predecessor => (slot.block + 2) as f64,
            GeneRole::Operation => OperationKind::COUNT as f64,
        };
        Interval { lo: 0.0, hi }
    }

    pub fn intervals(&self) -> impl Iterator<Item = Interval> + '_ {
        (0..self.len()).map(|p| self.interval(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operation_ordinals_follow_interval_order() {
        for (k, op) in OperationKind::ALL.iter().enumerate() {
            assert_eq!(op.ordinal(), k);
            assert_eq!(OperationKind::from_ordinal(k), Some(*op));
            assert_eq!(op.name().parse::<OperationKind>().unwrap(), *op);
        }
        assert_eq!(OperationKind::from_ordinal(7), None);
        assert_eq!(OperationKind::SepConv5.kernel_size(), 5);
        assert_eq!(OperationKind::Identity.kernel_size(), 0);
        assert!(!OperationKind::MaxPool3.is_parameterized());
        assert!(OperationKind::DilConv3.is_parameterized());
    }

    #[test]
    fn gene_layout() {
        let scheme = SearchSpaceScheme::new(4).unwrap();
        assert_eq!(scheme.len(), 32);
        let slot = scheme.slot(9);
        assert_eq!(slot.cell, CellType::Normal);
        assert_eq!(slot.block, 2);
        assert_eq!(slot.role, GeneRole::Operation);
        assert_eq!(slot.edge, 0);
        assert_eq!(scheme.slot(16).cell, CellType::Reduction);
        assert_eq!(scheme.slot(16).block, 0);
        for p in 0..scheme.len() {
            let s = scheme.slot(p);
            assert_eq!(scheme.position(s.cell, s.block, s.role, s.edge), p);
        }
        // block 2 predecessor: [0, 4)
        assert_eq!(scheme.interval(8), Interval { lo: 0.0, hi: 4.0 });
        assert_eq!(scheme.interval(11), Interval { lo: 0.0, hi: 7.0 });
    }

    #[test]
    fn zero_blocks_rejected() {
        assert!(SearchSpaceScheme::new(0).is_err());
    }
}
