//! On-disk formats: JSONL traces and allocation reports, and the summary CSV.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::env::RoundReport;
use crate::error::{Error, Result};
use crate::model::{Record, RegretRecord};

pub fn trace_file_name(seed: u64) -> String {
    format!("trace_seed{seed}.jsonl")
}

pub fn subroutine_file_name(seed: u64) -> String {
    format!("subroutine_seed{seed}.jsonl")
}

/// Writes one JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads one JSON object per non-empty line, reporting the 1-based line of any failure.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::TraceParse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

/// Reads a trace and checks that rounds run `1, 2, …` without gaps.
pub fn read_trace(path: &Path) -> Result<Vec<Record>> {
    let records: Vec<Record> = read_jsonl(path)?;
    for (i, r) in records.iter().enumerate() {
        if r.t != i + 1 {
            return Err(Error::TraceParse {
                line: i + 1,
                message: format!("expected round {}, found {}", i + 1, r.t),
            });
        }
    }
    Ok(records)
}

pub fn read_reports(path: &Path) -> Result<Vec<RoundReport>> {
    read_jsonl(path)
}

/// One row of `summary.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub seed: u64,
    pub t: usize,
    pub cum_pathwise_regret: f64,
    pub cum_pseudo_regret: f64,
}

pub fn summary_rows(seed: u64, regret: &RegretRecord) -> impl Iterator<Item = SummaryRow> + '_ {
    regret
        .cum_pathwise
        .iter()
        .zip(&regret.cum_pseudo)
        .enumerate()
        .map(move |(i, (p, q))| SummaryRow {
            seed,
            t: i + 1,
            cum_pathwise_regret: *p,
            cum_pseudo_regret: *q,
        })
}

pub fn write_summary(path: &Path, rows: impl IntoIterator<Item = SummaryRow>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}
