//! Line-oriented metrics files: one JSON object per line, tagged by a
//! `record` field. Runs are appended, so one file may hold several runs,
//! each opened by a `run` record. See `docs/metrics.md`.

use std::fs::OpenOptions;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FoldReport, RunMetrics, TrainConfig};

/// Field holding elapsed seconds, ignored when comparing runs.
pub const TIMING_FIELD: &str = "wall_time";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Run { kind: String, dataset: String, config: TrainConfig },
    Fold(FoldReport),
    Aggregate { dataset: String, folds: usize, mean_accuracy: f64, std_accuracy: f64, summary: String },
    Epoch { epoch: usize, loss: f64 },
    Test { dataset: String, train_size: usize, test_size: usize, accuracy: f64, wall_time: f64 },
}

pub fn write_records<W: Write>(records: &[Record], mut out: W) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Appends `records` to `path`, creating it if needed.
pub fn append_records(path: impl AsRef<Path>, records: &[Record]) -> io::Result<()> {
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    write_records(records, BufWriter::new(file))
}

pub fn read_records<R: BufRead>(input: R) -> io::Result<Vec<Record>> {
    input
        .lines()
        .filter(|l| !matches!(l, Ok(l) if l.trim().is_empty()))
        .map(|l| serde_json::from_str(&l?).map_err(io::Error::from))
        .collect()
}

/// Records describing a cross-validation run.
pub fn crossval_records(metrics: &RunMetrics) -> Vec<Record> {
    let mut out = vec![Record::Run {
        kind: "crossval".into(),
        dataset: metrics.dataset.clone(),
        config: metrics.config.clone(),
    }];
    out.extend(metrics.folds.iter().cloned().map(Record::Fold));
    out.push(Record::Aggregate {
        dataset: metrics.dataset.clone(),
        folds: metrics.folds.len(),
        mean_accuracy: metrics.mean_accuracy,
        std_accuracy: metrics.std_accuracy,
        summary: metrics.summary(),
    });
    out
}

/// Drops every timing field so two runs can be compared as text.
pub fn strip_timing(text: &str) -> String {
    text.lines()
        .map(|line| match serde_json::from_str::<serde_json::Value>(line) {
            Ok(serde_json::Value::Object(mut map)) => {
                map.remove(TIMING_FIELD);
                serde_json::Value::Object(map).to_string()
            }
            _ => line.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}
