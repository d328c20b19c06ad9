//! Training log serialization: JSON lines, one object per event.
//!
//! The first line is a `meta` event recording the run mode and fingerprints;
//! every following line is a `step` or `epoch` event with a fixed field set
//! (inapplicable fields are null). No timestamps, so reruns are
//! byte-identical.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use dialogic_core::trainer::LogRecord;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct MetaLine {
    pub event: String,
    pub mode: String,
    pub config_hash: String,
    pub rng_seed: u64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct LogLine {
    pub event: String,
    pub epoch: usize,
    pub step: Option<usize>,
    pub ce_loss: f64,
    pub contrastive_loss: f64,
    pub total_loss: f64,
    pub pool_size: usize,
    pub fallback_rate: Option<f64>,
    pub val_macro_f1: Option<f64>,
}

impl From<&LogRecord> for LogLine {
    fn from(record: &LogRecord) -> Self {
        LogLine {
            event: record.event.as_str().to_string(),
            epoch: record.epoch,
            step: record.step,
            ce_loss: record.ce_loss,
            contrastive_loss: record.contrastive_loss,
            total_loss: record.total_loss,
            pool_size: record.pool_size,
            fallback_rate: record.fallback_rate,
            val_macro_f1: record.val_macro_f1,
        }
    }
}

/// Writes the meta line followed by every training record.
pub fn write_log(
    path: &Path,
    mode: &str,
    config_hash: &str,
    rng_seed: u64,
    records: &[LogRecord],
) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating log {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    let meta = MetaLine {
        event: "meta".into(),
        mode: mode.into(),
        config_hash: config_hash.into(),
        rng_seed,
    };
    serde_json::to_writer(&mut writer, &meta)?;
    writer.write_all(b"\n")?;
    for record in records {
        serde_json::to_writer(&mut writer, &LogLine::from(record))?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a log back: the meta line plus all events.
pub fn read_log(path: &Path) -> Result<(MetaLine, Vec<LogLine>)> {
    let raw =
        std::fs::read_to_string(path).with_context(|| format!("reading log {}", path.display()))?;
    let mut lines = raw.lines().filter(|l| !l.trim().is_empty());
    let meta_line = lines.next().context("log is empty")?;
    let meta: MetaLine = serde_json::from_str(meta_line).context("parsing log meta line")?;
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let record: LogLine =
            serde_json::from_str(line).with_context(|| format!("parsing log line {}", i + 2))?;
        records.push(record);
    }
    Ok((meta, records))
}
