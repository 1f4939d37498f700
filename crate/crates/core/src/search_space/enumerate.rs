use super::{Block, CellGenotype, CellType, Genotype, OperationKind, SearchSpaceScheme};
use crate::error::{Error, Result};

pub const DEFAULT_ENUMERATION_CAP: u128 = 100_000_000;

/// Number of distinct cells: `prod_b ((b + 2) * 7)^2`. Saturates at `u128::MAX`.
pub fn cell_space_size(scheme: &SearchSpaceScheme) -> u128 {
    (0..scheme.blocks_per_cell())
        .map(|b| {
            let choices = ((b + 2) * OperationKind::COUNT) as u128;
            choices * choices
        })
        .try_fold(1u128, |acc, n| acc.checked_mul(n))
        .unwrap_or(u128::MAX)
}

pub fn genotype_space_size(scheme: &SearchSpaceScheme) -> u128 {
    let cells = cell_space_size(scheme);
    cells.checked_mul(cells).unwrap_or(u128::MAX)
}

fn check_cap(count: u128, cap: u128) -> Result<()> {
    if count > cap {
        Err(Error::SpaceTooLarge { count, cap })
    } else {
        Ok(())
    }
}

/// Every cell of one type, each exactly once.
pub fn enumerate_cells(scheme: &SearchSpaceScheme, cell_type: CellType, cap: u128) -> Result<CellIter> {
    check_cap(cell_space_size(scheme), cap)?;
    Ok(CellIter::new(scheme.blocks_per_cell(), cell_type))
}

/// Every genotype (normal x reduction), each exactly once.
pub fn enumerate_genotypes(scheme: &SearchSpaceScheme, cap: u128) -> Result<GenotypeIter> {
    check_cap(genotype_space_size(scheme), cap)?;
    let mut normals = CellIter::new(scheme.blocks_per_cell(), CellType::Normal);
    let current = normals.next();
    Ok(GenotypeIter {
        normals,
        current,
        reductions: CellIter::new(scheme.blocks_per_cell(), CellType::Reduction),
    })
}

/// Mixed-radix odometer over the `(pre1, op1, pre2, op2)` digits of each block.
#[derive(Clone, Debug)]
pub struct CellIter {
    cell_type: CellType,
    radices: Vec<usize>,
    digits: Vec<usize>,
    done: bool,
}

impl CellIter {
    fn new(blocks: usize, cell_type: CellType) -> Self {
        let radices: Vec<usize> = (0..blocks)
            .flat_map(|b| [b + 2, OperationKind::COUNT, b + 2, OperationKind::COUNT])
            .collect();
        CellIter {
            cell_type,
            digits: vec![0; radices.len()],
            radices,
            done: false,
        }
    }

    fn current(&self) -> CellGenotype {
        let op = |d: usize| OperationKind::from_ordinal(d).unwrap();
        let blocks = self
            .digits
            .chunks_exact(4)
            .map(|d| Block::new(d[0], op(d[1]), d[2], op(d[3])))
            .collect();
        CellGenotype {
            cell_type: self.cell_type,
            blocks,
        }
    }
}

impl Iterator for CellIter {
    type Item = CellGenotype;

    fn next(&mut self) -> Option<CellGenotype> {
        if self.done {
            return None;
        }
        let item = self.current();
        // Advance the last digit fastest.
        let mut i = self.digits.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.digits[i] += 1;
            if self.digits[i] < self.radices[i] {
                break;
            }
            self.digits[i] = 0;
        }
        Some(item)
    }
}

#[derive(Clone, Debug)]
pub struct GenotypeIter {
    normals: CellIter,
    current: Option<CellGenotype>,
    reductions: CellIter,
}

impl Iterator for GenotypeIter {
    type Item = Genotype;

    fn next(&mut self) -> Option<Genotype> {
        loop {
            let normal = self.current.as_ref()?;
            if let Some(reduction) = self.reductions.next() {
                return Some(Genotype {
                    normal: normal.clone(),
                    reduction,
                });
            }
            self.current = self.normals.next();
            self.reductions = CellIter::new(self.reductions.radices.len() / 4, CellType::Reduction);
        }
    }
}
