//! The per-generation CSV log: one row per loss estimate.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::slow_fast::GenerationStats;

/// Bumped whenever the columns of [`LogRow`] change.
pub const LOG_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub generation: usize,
    pub pair_index: usize,
    pub individual_id: usize,
    /// `fast` or `slow`.
    pub role: String,
    pub loss: f64,
    /// Canonical genotype JSON.
    pub genotype: String,
}

impl LogRow {
    pub fn from_stats(stats: &GenerationStats) -> impl Iterator<Item = LogRow> + '_ {
        stats.records.iter().map(move |r| LogRow {
            generation: stats.generation,
            pair_index: r.pair_index,
            individual_id: r.individual_id,
            role: if r.is_fast { "fast" } else { "slow" }.to_string(),
            loss: r.loss,
            genotype: r.genotype.to_json(),
        })
    }
}

/// Writes `log.csv`; the header goes out with the first row.
pub struct LogWriter {
    inner: csv::Writer<BufWriter<File>>,
    path: PathBuf,
}

impl LogWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(LogWriter {
            inner: csv::Writer::from_writer(BufWriter::new(file)),
            path: path.to_path_buf(),
        })
    }

    /// Keeps the header and every row with `generation <= keep_through`,
    /// then continues appending after them.
    pub fn truncate_after(path: &Path, keep_through: usize) -> Result<Self> {
        let rows = read_log(path)?;
        let mut writer = Self::create(path)?;
        for row in rows.into_iter().filter(|r| r.generation <= keep_through) {
            writer.inner.serialize(row)?;
        }
        writer.flush()?;
        Ok(writer)
    }

    pub fn write_generation(&mut self, stats: &GenerationStats) -> Result<()> {
        for row in LogRow::from_stats(stats) {
            self.inner.serialize(row)?;
        }
        self.flush()
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner
            .flush()
            .map_err(|e| Error::io(&self.path, e))
    }
}

pub fn read_log(path: &Path) -> Result<Vec<LogRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}
