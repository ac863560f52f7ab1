//! Append-only CSV metrics.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One logged training checkpoint. Empty cells mean "not applicable"
/// (no finished episode yet, or no learned embedding).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub global_step: u64,
    pub episodes_completed: u64,
    pub mean_return: Option<f64>,
    pub mean_episode_length: Option<f64>,
    pub mean_intrinsic_reward: f64,
    pub forward_loss: Option<f64>,
    pub inverse_loss: Option<f64>,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub wall_clock_seconds: f64,
}

/// Writes rows with a header, flushing after every row.
pub struct MetricsWriter {
    path: PathBuf,
    writer: csv::Writer<File>,
    last_step: Option<u64>,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        Ok(MetricsWriter {
            path: path.to_path_buf(),
            writer,
            last_step: None,
        })
    }

    pub fn append(&mut self, row: &MetricsRow) -> Result<()> {
        if self.last_step.is_some_and(|s| row.global_step <= s) {
            return Err(Error::usage(format!(
                "metrics rows must increase in global_step ({} after {})",
                row.global_step,
                self.last_step.unwrap_or_default()
            )));
        }
        self.writer.serialize(row).map_err(|e| csv_error(&self.path, e))?;
        self.writer.flush()?;
        self.last_step = Some(row.global_step);
        Ok(())
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            reason: format!("{kind:?}"),
        },
    }
}

/// Reads a metrics file, checking that steps strictly increase.
pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut rows: Vec<MetricsRow> = Vec::new();
    for record in reader.deserialize() {
        let row: MetricsRow = record.map_err(|e| csv_error(path, e))?;
        if let Some(prev) = rows.last() {
            if row.global_step <= prev.global_step {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    // Header is line 1.
                    line: rows.len() + 2,
                    reason: format!("global_step {} does not increase past {}", row.global_step, prev.global_step),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}
