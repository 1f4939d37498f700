//! Architecture search by pairwise slow-fast learning.
//!
//! Candidate cells are encoded as real vectors ([`search_space`]); a population
//! of such vectors is improved by letting the worse member of each random pair
//! step toward the better one ([`slow_fast`]). Candidates are scored by cheap
//! one-epoch estimates that warm-start from a shared weight set
//! ([`weight_store`], [`evaluators`]). [`harness`] adds configuration,
//! logging, checkpoints and the baseline oracles.

pub mod error;
pub mod evaluators;
pub mod harness;
pub mod rng;
pub mod search_space;
pub mod slow_fast;
pub mod weight_store;

pub use error::{Error, Result};
