//! File formats: explanation sets (CSV, JSON), reports and grids.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::axe::AxeRow;
use crate::domain::{Explanation, REPORT_SCHEMA_VERSION};
use crate::error::{Error, Result};

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// An explanation set with its column names, as persisted in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationSet {
    pub schema_version: u32,
    pub explainer_tag: String,
    pub feature_names: Vec<String>,
    pub explanations: Vec<Explanation>,
}

impl ExplanationSet {
    pub fn new(feature_names: &[String], explanations: Vec<Explanation>) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            explainer_tag: explanations.first().map(|e| e.explainer_tag.clone()).unwrap_or_default(),
            feature_names: feature_names.to_vec(),
            explanations,
        }
    }
}

/// `row,<feature...>` header then one line per explanation. Values use the
/// shortest representation that round-trips.
pub fn write_explanations_csv(path: impl AsRef<Path>, feature_names: &[String], explanations: &[Explanation]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["row".to_string()];
    header.extend(feature_names.iter().cloned());
    w.write_record(&header)?;
    for e in explanations {
        if e.len() != feature_names.len() {
            return Err(Error::LengthMismatch {
                what: "explanation",
                expected: feature_names.len(),
                found: e.len(),
            });
        }
        let mut rec = vec![e.datapoint_index.to_string()];
        rec.extend(e.importances.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an explanation CSV written by [`write_explanations_csv`]. The tag
/// is the file stem.
pub fn read_explanations_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Explanation>)> {
    let path = path.as_ref();
    let tag = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("row") {
        return Err(Error::SchemaMismatch("explanation CSV must start with a `row` column".into()));
    }
    let names = header[1..].to_vec();
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |col: usize| -> Result<f64> {
            let cell = rec.get(col).unwrap_or("").trim();
            cell.parse().map_err(|_| Error::Parse {
                row: i + 1,
                col: col + 1,
                value: cell.to_string(),
            })
        };
        if rec.len() != header.len() {
            return Err(Error::LengthMismatch {
                what: "explanation CSV record",
                expected: header.len(),
                found: rec.len(),
            });
        }
        let row = parse(0)?;
        let importances = (1..header.len()).map(parse).collect::<Result<Vec<_>>>()?;
        out.push(Explanation::new(importances, row as usize, tag.clone()));
    }
    Ok((names, out))
}

/// Loads an explanation set from `.json` or `.csv` by extension.
pub fn read_explanations(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Explanation>)> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => {
            let set: ExplanationSet = read_json(path)?;
            Ok((set.feature_names, set.explanations))
        }
        _ => read_explanations_csv(path),
    }
}

/// Per-row AXE outcomes: row, chosen features (`;`-joined), ŷ, y, q.
pub fn write_axe_rows_csv(path: impl AsRef<Path>, rows: &[AxeRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["row", "features", "y_hat", "y", "q"])?;
    for r in rows {
        let feats: Vec<String> = r.features.iter().map(usize::to_string).collect();
        w.write_record([
            r.row.to_string(),
            feats.join(";"),
            r.y_hat.to_string(),
            r.y.to_string(),
            r.q.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
