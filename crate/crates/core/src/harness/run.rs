//! Search and resume drivers that write the run artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::checkpoint::{checkpoint_file_name, Checkpoint};
use super::config::{EvaluatorKind, RunConfig};
use super::log::{LogWriter, LOG_SCHEMA_VERSION};
use super::Setup;
use crate::error::{Error, Result};
use crate::slow_fast::SearchState;

pub const LOG_FILE: &str = "log.csv";
pub const BEST_FILE: &str = "best_genotype.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Stop once this many generations are complete, leaving a checkpoint to
    /// resume from.
    pub stop_after: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub population: usize,
    pub generations: usize,
    pub completed_generations: usize,
    pub finished: bool,
    pub evaluator: EvaluatorKind,
    pub best_loss: f64,
    pub best_generation: usize,
    pub best_individual_id: usize,
    pub wall_time_seconds: f64,
    pub log_schema_version: u32,
    pub config_hash: String,
}

/// Fresh search from generation 0 into `config.out`.
pub fn run_search(config: &RunConfig, options: RunOptions) -> Result<RunSummary> {
    let setup = Setup::new(config)?;
    let out = config.out.clone();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let state = SearchState::initialize(&config.search, &setup.scheme, &*setup.evaluator, &config.streams())?;
    let log = LogWriter::create(&out.join(LOG_FILE))?;
    drive(config, &setup, state, log, &out, 0.0, options)
}

/// Continues from `checkpoint`. When `supplied` is given its hash must match
/// the checkpoint's config. Artifacts go to `out`, or next to the checkpoint.
pub fn resume_search(
    checkpoint: &Path,
    supplied: Option<&RunConfig>,
    out: Option<&Path>,
    options: RunOptions,
) -> Result<RunSummary> {
    let ckpt = Checkpoint::load(checkpoint)?;
    if let Some(supplied) = supplied {
        ckpt.ensure_matches(supplied)?;
    }
    let out: PathBuf = match out {
        Some(o) => o.to_path_buf(),
        None => checkpoint
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    let mut config = ckpt.config.clone();
    config.out = out.clone();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let setup = Setup::new(&config)?;
    let state = ckpt.restore_state()?;
    let log_path = out.join(LOG_FILE);
    let log = if log_path.exists() {
        LogWriter::truncate_after(&log_path, state.generation())?
    } else {
        let mut log = LogWriter::create(&log_path)?;
        for stats in &state.history {
            log.write_generation(&setup.present_stats(stats))?;
        }
        log
    };
    drive(&config, &setup, state, log, &out, ckpt.payload.elapsed_seconds, options)
}

fn drive(
    config: &RunConfig,
    setup: &Setup,
    mut state: SearchState,
    mut log: LogWriter,
    out: &Path,
    elapsed_before: f64,
    options: RunOptions,
) -> Result<RunSummary> {
    let started = Instant::now();
    let elapsed = || elapsed_before + started.elapsed().as_secs_f64();
    let mut saved_at = None;
    while !state.is_finished(&config.search) {
        if options.stop_after.is_some_and(|s| state.generation() >= s) {
            break;
        }
        let stats = state.step(&*setup.evaluator, &setup.scheme, &config.search)?;
        log.write_generation(&setup.present_stats(stats))?;
        let g = state.generation();
        if g % config.checkpoint_every == 0 {
            Checkpoint::capture(config, &state, elapsed()).save(&out.join(checkpoint_file_name(g)))?;
            saved_at = Some(g);
        }
    }
    let g = state.generation();
    if saved_at != Some(g) && g > 0 {
        Checkpoint::capture(config, &state, elapsed()).save(&out.join(checkpoint_file_name(g)))?;
    }
    write_artifacts(config, setup, &state, out, elapsed())
}

fn write_artifacts(config: &RunConfig, setup: &Setup, state: &SearchState, out: &Path, wall: f64) -> Result<RunSummary> {
    let best = state
        .best
        .as_ref()
        .ok_or_else(|| Error::Config("no generation ran, nothing to report".into()))?;
    let genotype = setup.present(&best.genotype);
    write(out.join(BEST_FILE), genotype.to_json_pretty() + "\n")?;
    write(out.join("normal.dot"), genotype.normal.to_dag().to_dot())?;
    write(out.join("reduction.dot"), genotype.reduction.to_dag().to_dot())?;
    let summary = RunSummary {
        seed: config.seed,
        population: config.search.population,
        generations: config.search.generations,
        completed_generations: state.generation(),
        finished: state.is_finished(&config.search),
        evaluator: config.evaluator.kind,
        best_loss: best.loss,
        best_generation: best.generation,
        best_individual_id: best.individual_id,
        wall_time_seconds: wall,
        log_schema_version: LOG_SCHEMA_VERSION,
        config_hash: config.hash(),
    };
    write(out.join(SUMMARY_FILE), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(summary)
}

fn write(path: PathBuf, contents: String) -> Result<()> {
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}
