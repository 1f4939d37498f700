//! Named random sub-streams derived from one master seed.
//!
//! Each consumer (population init, pairing, lambdas, weight init, dataset,
//! batch shuffling, ...) gets its own ChaCha8 stream keyed by
//! `SHA-256(master || label)`, so adding draws to one consumer never shifts
//! another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const POPULATION: &str = "population";
pub const PAIRING: &str = "pairing";
pub const LAMBDAS: &str = "lambdas";
pub const OMEGA: &str = "omega";
pub const DATASET: &str = "dataset";
pub const BATCH_SHUFFLE: &str = "batch_shuffle";
pub const PROJECTION_INIT: &str = "projection_init";
pub const TARGET: &str = "target";
pub const RANDOM_SEARCH: &str = "random_search";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedStreams {
    master: u64,
}

impl SeedStreams {
    pub fn new(master: u64) -> Self {
        SeedStreams { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn seed(&self, label: &str) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.master.to_le_bytes());
        h.update(label.as_bytes());
        h.finalize().into()
    }

    pub fn rng(&self, label: &str) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.seed(label))
    }

    pub fn seed_u64(&self, label: &str) -> u64 {
        u64::from_le_bytes(self.seed(label)[..8].try_into().unwrap())
    }
}

/// Deterministic seed for one `(base, a, b, ...)` tuple.
pub fn mix(base: u64, parts: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    for p in parts {
        h.update(p.to_le_bytes());
    }
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}

/// Exact position of a ChaCha8 stream, for checkpoints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: String,
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        let seed: String = rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
        RngState {
            seed,
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> Result<ChaCha8Rng> {
        let bad = || Error::CorruptCheckpoint(format!("bad rng seed {:?}", self.seed));
        if self.seed.len() != 64 || !self.seed.is_ascii() {
            return Err(bad());
        }
        let mut seed = [0u8; 32];
        for (i, byte) in seed.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&self.seed[2 * i..2 * i + 2], 16).map_err(|_| bad())?;
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        Ok(rng)
    }
}
