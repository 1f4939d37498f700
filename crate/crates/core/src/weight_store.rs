//! The shared weight set: one parameter entry for every possible
//! `(cell type, edge, operation)` of the search space.
//!
//! Candidates copy the entries they use ([`WeightSet::inherit`]), train the
//! copies, and the trained copies of a pair are written back with the fast
//! learner taking precedence ([`WeightSet::commit`]).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::search_space::{CellType, Genotype, OperationKind, SearchSpaceScheme};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeightKey {
    pub cell_type: CellType,
    pub source: usize,
    pub target: usize,
    pub op: OperationKind,
}

impl WeightKey {
    pub fn new(cell_type: CellType, source: usize, target: usize, op: OperationKind) -> Self {
        WeightKey {
            cell_type,
            source,
            target,
            op,
        }
    }
}

impl fmt::Display for WeightKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}/{}", self.cell_type, self.source, self.target, self.op)
    }
}

impl FromStr for WeightKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::UnknownKey(s.to_string());
        let parts: Vec<&str> = s.split('/').collect();
        let [cell, src, dst, op] = parts.as_slice() else {
            return Err(bad());
        };
        Ok(WeightKey {
            cell_type: cell.parse().map_err(|_| bad())?,
            source: src.parse().map_err(|_| bad())?,
            target: dst.parse().map_err(|_| bad())?,
            op: op.parse().map_err(|_| bad())?,
        })
    }
}

/// All keys of the space: per cell type, per target node `t`, per source
/// `s < t`, all seven operations.
pub fn enumerate_keys(scheme: &SearchSpaceScheme) -> Vec<WeightKey> {
    let mut keys = Vec::new();
    for cell_type in CellType::BOTH {
        for target in 2..scheme.blocks_per_cell() + 2 {
            for source in 0..target {
                for op in OperationKind::ALL {
                    keys.push(WeightKey::new(cell_type, source, target, op));
                }
            }
        }
    }
    keys.sort();
    keys
}

/// Keys a genotype uses, deduplicated.
pub fn genotype_keys(g: &Genotype) -> BTreeSet<WeightKey> {
    CellType::BOTH
        .iter()
        .flat_map(|&t| {
            g.cell(t)
                .edges()
                .map(move |(src, dst, op)| WeightKey::new(t, src, dst, op))
        })
        .collect()
}

/// Parameter layout for one key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamShape {
    pub dims: Vec<usize>,
    /// Number of inputs feeding each output unit; sets the init scale.
    pub fan_in: usize,
}

impl ParamShape {
    pub fn empty() -> Self {
        ParamShape {
            dims: Vec::new(),
            fan_in: 0,
        }
    }

    pub fn numel(&self) -> usize {
        if self.dims.is_empty() {
            0
        } else {
            self.dims.iter().product()
        }
    }
}

/// Maps each key position to the parameter shape an evaluator expects there.
pub trait ShapeRegistry {
    fn shape(&self, key: &WeightKey) -> Option<ParamShape>;
}

/// Registry for evaluators that never read weights: every entry is empty.
#[derive(Clone, Copy, Debug, Default)]
pub struct ParameterFree;

impl ShapeRegistry for ParameterFree {
    fn shape(&self, _key: &WeightKey) -> Option<ParamShape> {
        Some(ParamShape::empty())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightEntry {
    pub shape: Vec<usize>,
    pub params: Vec<f64>,
    pub version: u64,
}

impl WeightEntry {
    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }
}

/// Copies of the entries one candidate uses.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InheritedWeights {
    pub entries: BTreeMap<WeightKey, WeightEntry>,
}

impl InheritedWeights {
    pub fn keys(&self) -> impl Iterator<Item = &WeightKey> {
        self.entries.keys()
    }

    pub fn get(&self, key: &WeightKey) -> Option<&WeightEntry> {
        self.entries.get(key)
    }

    pub fn same_keys(&self, other: &InheritedWeights) -> bool {
        self.entries.keys().eq(other.entries.keys())
    }

    pub fn param_count(&self) -> usize {
        self.entries.values().map(|e| e.params.len()).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightSet {
    blocks_per_cell: usize,
    entries: BTreeMap<WeightKey, WeightEntry>,
}

impl WeightSet {
    /// Fills every key: parameterized entries uniform on `[-a, a)` with
    /// `a = sqrt(3 / fan_in)`, parameter-free entries empty, versions zero.
    pub fn init<R: Rng + ?Sized>(
        scheme: &SearchSpaceScheme,
        registry: &dyn ShapeRegistry,
        rng: &mut R,
    ) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for key in enumerate_keys(scheme) {
            let shape = registry
                .shape(&key)
                .ok_or_else(|| Error::MissingShape(key.to_string()))?;
            let numel = shape.numel();
            let params = if numel == 0 {
                Vec::new()
            } else {
                let a = (3.0 / shape.fan_in.max(1) as f64).sqrt();
                (0..numel).map(|_| rng.random_range(-a..a)).collect()
            };
            entries.insert(
                key,
                WeightEntry {
                    shape: shape.dims,
                    params,
                    version: 0,
                },
            );
        }
        Ok(WeightSet {
            blocks_per_cell: scheme.blocks_per_cell(),
            entries,
        })
    }

    pub fn blocks_per_cell(&self) -> usize {
        self.blocks_per_cell
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &WeightKey) -> Option<&WeightEntry> {
        self.entries.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &WeightKey> {
        self.entries.keys()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&WeightKey, &WeightEntry)> {
        self.entries.iter()
    }

    /// Copies the entries `g` uses; `self` is not modified.
    pub fn inherit(&self, g: &Genotype) -> InheritedWeights {
        let entries = genotype_keys(g)
            .into_iter()
            .map(|k| {
                let entry = self
                    .entries
                    .get(&k)
                    .unwrap_or_else(|| panic!("genotype key {k} outside the weight set"))
                    .clone();
                (k, entry)
            })
            .collect();
        InheritedWeights { entries }
    }

    /// Writes back a pair's trained weights: fast entries win, slow entries
    /// fill keys the fast learner did not use, everything else is untouched.
    /// Overwritten entries get their version bumped.
    pub fn commit(&mut self, fast: &InheritedWeights, slow: &InheritedWeights) -> Result<()> {
        for (key, entry) in fast.entries.iter().chain(slow.entries.iter()) {
            let current = self
                .entries
                .get(key)
                .ok_or_else(|| Error::UnknownKey(key.to_string()))?;
            if current.shape != entry.shape || current.params.len() != entry.params.len() {
                return Err(Error::ShapeMismatch {
                    key: key.to_string(),
                    expected: current.shape.clone(),
                    actual: entry.shape.clone(),
                });
            }
        }
        let slow_only = slow
            .entries
            .iter()
            .filter(|(k, _)| !fast.entries.contains_key(k));
        for (key, entry) in fast.entries.iter().chain(slow_only) {
            let slot = self.entries.get_mut(key).expect("checked above");
            slot.params.clone_from(&entry.params);
            slot.version += 1;
        }
        Ok(())
    }

    /// SHA-256 over keys, shapes, versions and parameter bits.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for (key, entry) in &self.entries {
            hasher.update(key.to_string().as_bytes());
            for d in &entry.shape {
                hasher.update((*d as u64).to_le_bytes());
            }
            hasher.update(entry.version.to_le_bytes());
            for p in &entry.params {
                hasher.update(p.to_bits().to_le_bytes());
            }
        }
        format!("{:x}", hasher.finalize())
    }

    pub fn to_segment(&self) -> WeightSegment {
        let entries = self
            .entries
            .iter()
            .map(|(key, e)| {
                let bytes: Vec<u8> = e.params.iter().flat_map(|p| p.to_le_bytes()).collect();
                (
                    key.to_string(),
                    SegmentEntry {
                        shape: e.shape.clone(),
                        version: e.version,
                        data: BASE64.encode(bytes),
                    },
                )
            })
            .collect();
        WeightSegment {
            blocks_per_cell: self.blocks_per_cell,
            entries,
        }
    }

    pub fn from_segment(segment: &WeightSegment) -> Result<Self> {
        let scheme = SearchSpaceScheme::new(segment.blocks_per_cell)
            .map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
        let mut entries = BTreeMap::new();
        for (text, e) in &segment.entries {
            let key: WeightKey = text
                .parse()
                .map_err(|_| Error::CorruptCheckpoint(format!("bad weight key {text:?}")))?;
            let bytes = BASE64
                .decode(&e.data)
                .map_err(|err| Error::CorruptCheckpoint(format!("{text}: {err}")))?;
            if bytes.len() % 8 != 0 {
                return Err(Error::CorruptCheckpoint(format!("{text}: truncated payload")));
            }
            let params: Vec<f64> = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let numel = if e.shape.is_empty() {
                0
            } else {
                e.shape.iter().product()
            };
            if params.len() != numel {
                return Err(Error::CorruptCheckpoint(format!(
                    "{text}: {} values for shape {:?}",
                    params.len(),
                    e.shape
                )));
            }
            entries.insert(
                key,
                WeightEntry {
                    shape: e.shape.clone(),
                    params,
                    version: e.version,
                },
            );
        }
        let expected: BTreeSet<WeightKey> = enumerate_keys(&scheme).into_iter().collect();
        if !entries.keys().copied().eq(expected.iter().copied()) {
            return Err(Error::CorruptCheckpoint(
                "weight segment does not cover the key space".into(),
            ));
        }
        Ok(WeightSet {
            blocks_per_cell: segment.blocks_per_cell,
            entries,
        })
    }
}

/// Serialized weight set, keyed by `"cell/src/dst/op_name"`. Parameters are
/// base64 of little-endian `f64` bytes, so round trips are bit exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSegment {
    pub blocks_per_cell: usize,
    pub entries: BTreeMap<String, SegmentEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentEntry {
    pub shape: Vec<usize>,
    pub version: u64,
    pub data: String,
}
