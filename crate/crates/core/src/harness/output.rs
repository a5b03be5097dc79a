use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::runner::{TrialRecord, RECORD_SCHEMA_VERSION};
use super::spec::ExperimentSpec;
use crate::error::Result;

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;
pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const METADATA_FILE: &str = "metadata.json";

/// Grid-point aggregate of successful trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub schema_version: u32,
    pub grid_index: usize,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub epsilon: f64,
    pub metric: String,
    pub trials: usize,
    pub failed: usize,
    pub mean: Option<f64>,
    pub std_err: Option<f64>,
}

/// Self-describing run metadata; `spec` has every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub schema_version: u32,
    pub crate_version: String,
    pub spec: ExperimentSpec,
    pub records: usize,
    pub failed: usize,
    pub determinism_hash: String,
}

pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for r in records {
        let at = match rows.iter().position(|s| s.grid_index == r.grid_index) {
            Some(i) => i,
            None => {
                rows.push(SummaryRow {
                    schema_version: SUMMARY_SCHEMA_VERSION,
                    grid_index: r.grid_index,
                    n: r.n,
                    m: r.m,
                    d: r.d,
                    epsilon: r.epsilon,
                    metric: r.metric.clone(),
                    trials: 0,
                    failed: 0,
                    mean: None,
                    std_err: None,
                });
                values.push(Vec::new());
                rows.len() - 1
            }
        };
        match r.value.filter(|_| r.error.is_none()) {
            Some(v) => values[at].push(v),
            None => rows[at].failed += 1,
        }
    }
    for (row, v) in rows.iter_mut().zip(&values) {
        row.trials = v.len();
        if v.is_empty() {
            continue;
        }
        let k = v.len() as f64;
        let mean = v.iter().sum::<f64>() / k;
        row.mean = Some(mean);
        if v.len() > 1 {
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
            row.std_err = Some((var / k).sqrt());
        }
    }
    rows.sort_by_key(|r| r.grid_index);
    rows
}

/// One JSON object per line.
pub fn records_jsonl(records: &[TrialRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// SHA-256 over the records with the wall-time field removed.
pub fn determinism_hash(records: &[TrialRecord]) -> Result<String> {
    let mut hasher = Sha256::new();
    for r in records {
        let mut value = serde_json::to_value(r)?;
        if let Some(obj) = value.as_object_mut() {
            obj.remove("wall_ms");
        }
        hasher.update(serde_json::to_string(&value)?.as_bytes());
        hasher.update(b"\n");
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| crate::error::Error::Io(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| crate::error::Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes records, summary and metadata into `dir`, creating it if needed.
pub fn write_outputs(
    spec: &ExperimentSpec,
    records: &[TrialRecord],
    dir: &Path,
) -> Result<RunMetadata> {
    fs::create_dir_all(dir)?;
    let meta = RunMetadata {
        schema_version: RECORD_SCHEMA_VERSION,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        spec: spec.clone(),
        records: records.len(),
        failed: records.iter().filter(|r| !r.ok()).count(),
        determinism_hash: determinism_hash(records)?,
    };
    write_file(&dir.join(RECORDS_FILE), &records_jsonl(records)?)?;
    write_file(&dir.join(SUMMARY_FILE), &summary_csv(&summarize(records))?)?;
    write_file(
        &dir.join(METADATA_FILE),
        &serde_json::to_string_pretty(&meta)?,
    )?;
    Ok(meta)
}

fn write_file(path: &PathBuf, text: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Reads a JSON-lines record file.
pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}
