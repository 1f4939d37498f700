//! Search checkpoints.
//!
//! A checkpoint is a JSON envelope holding the resolved config (as TOML
//! text), its hash, and a payload with everything needed to continue the
//! search bit-for-bit: population, weight set, RNG positions, best-so-far and
//! history. The payload is digested with SHA-256 over its exact bytes, so any
//! edit to it is detected on load.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};

use super::config::{hex, ConfigOverrides, RunConfig};
use crate::error::{Error, Result};
use crate::rng::RngState;
use crate::slow_fast::{BestRecord, GenerationStats, Population, SearchState};
use crate::weight_store::{WeightSegment, WeightSet};

const FORMAT: &str = "relnas-checkpoint";
const VERSION: u32 = 1;

pub fn checkpoint_file_name(generation: usize) -> String {
    format!("checkpoint_g{generation:04}.ckpt")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointPayload {
    pub population: Population,
    pub omega: WeightSegment,
    pub pairing_rng: RngState,
    pub lambda_rng: RngState,
    pub shuffle_base: u64,
    pub best: Option<BestRecord>,
    pub history: Vec<GenerationStats>,
    /// Wall time spent before this checkpoint, carried into the run summary.
    pub elapsed_seconds: f64,
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    generation: usize,
    config_hash: String,
    config: String,
    payload_sha256: String,
    payload: Box<RawValue>,
}

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub payload: CheckpointPayload,
}

impl Checkpoint {
    pub fn capture(config: &RunConfig, state: &SearchState, elapsed_seconds: f64) -> Self {
        Checkpoint {
            config: config.clone(),
            payload: CheckpointPayload {
                population: state.population.clone(),
                omega: state.omega.to_segment(),
                pairing_rng: RngState::capture(&state.pairing_rng),
                lambda_rng: RngState::capture(&state.lambda_rng),
                shuffle_base: state.shuffle_base,
                best: state.best.clone(),
                history: state.history.clone(),
                elapsed_seconds,
            },
        }
    }

    pub fn generation(&self) -> usize {
        self.payload.population.generation
    }

    pub fn restore_state(&self) -> Result<SearchState> {
        let p = &self.payload;
        Ok(SearchState {
            population: p.population.clone(),
            omega: WeightSet::from_segment(&p.omega)?,
            best: p.best.clone(),
            history: p.history.clone(),
            pairing_rng: p.pairing_rng.restore()?,
            lambda_rng: p.lambda_rng.restore()?,
            shuffle_base: p.shuffle_base,
        })
    }

    /// Writes to a temporary sibling first, then renames over `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let payload = serde_json::to_string(&self.payload)?;
        let envelope = Envelope {
            format: FORMAT.into(),
            version: VERSION,
            generation: self.generation(),
            config_hash: self.config.hash(),
            config: self.config.to_toml(),
            payload_sha256: hex(&Sha256::digest(payload.as_bytes())),
            payload: RawValue::from_string(payload)?,
        };
        let text = serde_json::to_string(&envelope)?;
        let tmp = path.with_extension("ckpt.tmp");
        std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let corrupt = |why: String| Error::CorruptCheckpoint(format!("{}: {why}", path.display()));
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let envelope: Envelope = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
        if envelope.format != FORMAT || envelope.version != VERSION {
            return Err(corrupt(format!(
                "unsupported format {:?} version {}",
                envelope.format, envelope.version
            )));
        }
        let digest = hex(&Sha256::digest(envelope.payload.get().as_bytes()));
        if digest != envelope.payload_sha256 {
            return Err(corrupt("payload digest does not match".into()));
        }
        let config = RunConfig::parse(&envelope.config, "checkpoint config", &ConfigOverrides::default())
            .map_err(|e| corrupt(e.to_string()))?;
        if config.hash() != envelope.config_hash {
            return Err(corrupt("embedded config does not match its recorded hash".into()));
        }
        let payload: CheckpointPayload =
            serde_json::from_str(envelope.payload.get()).map_err(|e| corrupt(e.to_string()))?;
        let checkpoint = Checkpoint { config, payload };
        checkpoint.check_consistency(envelope.generation).map_err(corrupt)?;
        Ok(checkpoint)
    }

    fn check_consistency(&self, recorded_generation: usize) -> std::result::Result<(), String> {
        let p = &self.payload;
        let c = &self.config;
        if p.population.generation != recorded_generation {
            return Err("generation in envelope and payload differ".into());
        }
        if p.population.len() != c.search.population {
            return Err(format!(
                "population holds {} individuals, config says {}",
                p.population.len(),
                c.search.population
            ));
        }
        if p.history.len() != p.population.generation {
            return Err("history length does not match the generation".into());
        }
        if p.omega.blocks_per_cell != c.space.blocks_per_cell {
            return Err("weight set and config disagree on blocks per cell".into());
        }
        let genes = c.scheme().len();
        if p.population
            .individuals
            .iter()
            .any(|i| i.alpha.len() != genes || i.delta_prev.len() != genes)
        {
            return Err("individual vectors have the wrong length".into());
        }
        Ok(())
    }

    /// Fails with `HashMismatch` unless `supplied` hashes like the checkpoint's config.
    pub fn ensure_matches(&self, supplied: &RunConfig) -> Result<()> {
        let (expected, found) = (supplied.hash(), self.config.hash());
        if expected != found {
            return Err(Error::HashMismatch { expected, found });
        }
        Ok(())
    }
}

/// The highest-generation checkpoint in `dir`, if any.
pub fn latest_checkpoint(dir: &Path) -> Result<Option<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut best: Option<(usize, PathBuf)> = None;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let generation = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_prefix("checkpoint_g")?.strip_suffix(".ckpt")?.parse::<usize>().ok());
        if let Some(g) = generation {
            if best.as_ref().is_none_or(|(b, _)| g > *b) {
                best = Some((g, path));
            }
        }
    }
    Ok(best.map(|(_, p)| p))
}
