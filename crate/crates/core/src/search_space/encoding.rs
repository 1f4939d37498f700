use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Block, CellGenotype, CellType, Genotype, GeneRole, Interval, OperationKind, SearchSpaceScheme};
use crate::error::{Error, Result};

/// Flat real-valued encoding of one candidate architecture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArchVector(Vec<f64>);

impl ArchVector {
    /// Wraps `values` after checking every gene against its interval.
    pub fn new(values: Vec<f64>, scheme: &SearchSpaceScheme) -> Result<Self> {
        validate(&values, scheme)?.into_result()?;
        Ok(ArchVector(values))
    }

    /// Caller guarantees validity (e.g. after clamping into the intervals).
    pub(crate) fn from_valid(values: Vec<f64>) -> Self {
        ArchVector(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneViolation {
    pub position: usize,
    pub value: f64,
    pub interval: Interval,
}

/// Every out-of-interval gene of a vector; empty iff the vector is valid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidityReport {
    pub violations: Vec<GeneViolation>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Turns the first violation into an `InvalidGene` error.
    pub fn into_result(self) -> Result<()> {
        match self.violations.into_iter().next() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidGene {
                position: v.position,
                value: v.value,
                interval: v.interval,
            }),
        }
    }
}

pub fn validate(values: &[f64], scheme: &SearchSpaceScheme) -> Result<ValidityReport> {
    if values.len() != scheme.len() {
        return Err(Error::LengthMismatch {
            expected: scheme.len(),
            actual: values.len(),
        });
    }
    let violations = values
        .iter()
        .zip(scheme.intervals())
        .enumerate()
        .filter(|(_, (v, interval))| !interval.contains(**v))
        .map(|(position, (&value, interval))| GeneViolation {
            position,
            value,
            interval,
        })
        .collect();
    Ok(ValidityReport { violations })
}

pub fn decode(vec: &ArchVector, scheme: &SearchSpaceScheme) -> Result<Genotype> {
    validate(vec.as_slice(), scheme)?.into_result()?;
    let genes = vec.as_slice();
    let cell = |cell_type: CellType| -> Result<CellGenotype> {
        let blocks = (0..scheme.blocks_per_cell())
            .map(|b| {
                let at = |role, edge| genes[scheme.position(cell_type, b, role, edge)].floor() as usize;
                let op = |edge| {
                    OperationKind::from_ordinal(at(GeneRole::Operation, edge))
                        .expect("validated operation gene")
                };
                Block::new(at(GeneRole::Predecessor, 0), op(0), at(GeneRole::Predecessor, 1), op(1))
            })
            .collect();
        CellGenotype::new(cell_type, blocks)
    };
    Genotype::new(cell(CellType::Normal)?, cell(CellType::Reduction)?)
}

/// Canonical inverse of [`decode`]: every discrete choice `k` maps to `k + 0.5`.
pub fn encode(g: &Genotype, scheme: &SearchSpaceScheme) -> Result<ArchVector> {
    if g.blocks_per_cell() != scheme.blocks_per_cell() {
        return Err(Error::SchemeMismatch(g.blocks_per_cell(), scheme.blocks_per_cell()));
    }
    g.validate()?;
    let mut values = Vec::with_capacity(scheme.len());
    for cell in [&g.normal, &g.reduction] {
        for block in &cell.blocks {
            values.extend([
                block.pre1 as f64 + 0.5,
                block.op1.ordinal() as f64 + 0.5,
                block.pre2 as f64 + 0.5,
                block.op2.ordinal() as f64 + 0.5,
            ]);
        }
    }
    Ok(ArchVector(values))
}

/// Draws every gene uniformly from its interval.
pub fn random_arch<R: Rng + ?Sized>(rng: &mut R, scheme: &SearchSpaceScheme) -> ArchVector {
    ArchVector(
        scheme
            .intervals()
            .map(|i| rng.random_range(i.lo..i.hi))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scheme(b: usize) -> SearchSpaceScheme {
        SearchSpaceScheme::new(b).unwrap()
    }

    #[test]
    fn op_gene_intervals() {
        let s = scheme(1);
        let mut v = vec![0.0; 8];
        v[1] = 3.4;
        v[3] = 6.999;
        v[0] = 1.99;
        let g = decode(&ArchVector::new(v.clone(), &s).unwrap(), &s).unwrap();
        assert_eq!(g.normal.blocks[0].op1, OperationKind::SepConv3);
        assert_eq!(g.normal.blocks[0].op2, OperationKind::DilConv5);
        assert_eq!(g.normal.blocks[0].pre1, 1);
        assert_eq!(g.reduction.blocks[0].op1, OperationKind::MaxPool3);
    }

    #[test]
    fn zeros_are_valid() {
        let s = scheme(4);
        assert!(validate(&vec![0.0; 32], &s).unwrap().is_valid());
    }

    #[test]
    fn right_endpoints_are_excluded() {
        let s = scheme(4);
        let mut v = vec![0.0; 32];
        v[1] = 7.0;
        v[8] = 4.0;
        let report = validate(&v, &s).unwrap();
        assert_eq!(report.violations.len(), 2);
        assert_eq!(report.violations[0].position, 1);
        assert_eq!(report.violations[1].interval, Interval { lo: 0.0, hi: 4.0 });
        match ArchVector::new(v, &s) {
            Err(Error::InvalidGene { position: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_and_negative_rejected() {
        let s = scheme(1);
        let mut v = vec![0.0; 8];
        v[2] = f64::NAN;
        v[5] = -0.01;
        assert_eq!(validate(&v, &s).unwrap().violations.len(), 2);
    }

    #[test]
    fn length_checked() {
        assert!(matches!(
            validate(&[0.0; 7], &scheme(1)),
            Err(Error::LengthMismatch { expected: 8, actual: 7 })
        ));
    }

    #[test]
    fn midpoint_encoding() {
        use OperationKind::*;
        let s = scheme(1);
        let g = Genotype::new(
            CellGenotype::new(CellType::Normal, vec![Block::new(0, SepConv3, 1, Identity)]).unwrap(),
            CellGenotype::new(CellType::Reduction, vec![Block::new(1, Identity, 0, Identity)]).unwrap(),
        )
        .unwrap();
        let v = encode(&g, &s).unwrap();
        assert_eq!(&v.as_slice()[..4], &[0.5, 3.5, 1.5, 2.5]);
        assert_eq!(decode(&v, &s).unwrap(), g);
    }

    #[test]
    fn all_identity_ops_encode_to_two_and_a_half() {
        let s = scheme(2);
        let cell = |t| {
            CellGenotype::new(
                t,
                vec![
                    Block::new(0, OperationKind::Identity, 1, OperationKind::Identity),
                    Block::new(2, OperationKind::Identity, 0, OperationKind::Identity),
                ],
            )
            .unwrap()
        };
        let g = Genotype::new(cell(CellType::Normal), cell(CellType::Reduction)).unwrap();
        let v = encode(&g, &s).unwrap();
        for (p, x) in v.as_slice().iter().enumerate() {
            if s.slot(p).role == GeneRole::Operation {
                assert_eq!(*x, 2.5);
            }
        }
    }

    #[test]
    fn encode_rejects_scheme_mismatch() {
        let s = scheme(2);
        let g = decode(&ArchVector::new(vec![0.0; 8], &scheme(1)).unwrap(), &scheme(1)).unwrap();
        assert!(matches!(encode(&g, &s), Err(Error::SchemeMismatch(1, 2))));
    }

    #[test]
    fn random_arch_is_seeded_and_valid() {
        let s = scheme(4);
        let a = random_arch(&mut ChaCha8Rng::seed_from_u64(3), &s);
        let b = random_arch(&mut ChaCha8Rng::seed_from_u64(3), &s);
        assert_eq!(a, b);
        assert_eq!(a.len(), 32);
        assert!(validate(a.as_slice(), &s).unwrap().is_valid());
    }
}
