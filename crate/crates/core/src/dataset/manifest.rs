use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleStatus {
    Ok,
    Skipped,
}

/// One manifest line. Skipped rows keep id, pipeline, face and seed and zero
/// the remaining fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    pub sample_id: String,
    pub pipeline: String,
    pub face_id: String,
    pub occluder_ids: Vec<String>,
    pub seed: u64,
    pub alpha: f64,
    pub scale: f64,
    /// Occluder canvas origin on the face canvas, `[x, y]`.
    pub placement: [i64; 2],
    pub config_hash: String,
    pub status: SampleStatus,
}

pub fn write_manifest(records: &[ManifestRecord], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Io { path: path.into(), source: e.into() })?;
        out.write_all(b"\n").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Manifest { line: i + 1, message: e.to_string() })?;
        records.push(rec);
    }
    Ok(records)
}
