use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};

/// Column layout and encodings for a CSV dataset. Serialized as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub name: String,
    pub column_names: Vec<String>,
    pub target_column: String,
    /// When set, a numeric target is binarized as `value > threshold`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protected_column: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub foil_columns: Vec<String>,
    /// Ordinal code for every category value, per categorical column.
    #[serde(default)]
    pub categorical_columns: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    pub drop_columns: Vec<String>,
    /// Free-form provenance notes.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl DatasetSchema {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let schema: Self = serde_json::from_str(&text)?;
        schema.validate()?;
        Ok(schema)
    }

    /// All-numeric schema for the given header.
    pub fn numeric(name: impl Into<String>, column_names: &[&str], target: &str) -> Self {
        Self {
            name: name.into(),
            column_names: column_names.iter().map(|s| s.to_string()).collect(),
            target_column: target.to_string(),
            target_threshold: None,
            protected_column: None,
            foil_columns: Vec::new(),
            categorical_columns: BTreeMap::new(),
            drop_columns: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cols: BTreeSet<&str> = self.column_names.iter().map(String::as_str).collect();
        let named = std::iter::once(&self.target_column)
            .chain(&self.protected_column)
            .chain(&self.foil_columns)
            .chain(&self.drop_columns)
            .chain(self.categorical_columns.keys());
        for c in named {
            if !cols.contains(c.as_str()) {
                return Err(Error::SchemaMismatch(format!(
                    "column {c:?} not listed in column_names"
                )));
            }
        }
        Ok(())
    }

    fn feature_columns(&self) -> Vec<&str> {
        self.column_names
            .iter()
            .filter(|c| **c != self.target_column && !self.drop_columns.contains(c))
            .map(String::as_str)
            .collect()
    }
}

/// Loads an RFC-4180 CSV with a header row. Categorical columns are encoded
/// with the schema maps, every feature is z-scored, zero-variance columns are
/// dropped with a metadata warning and rows with empty cells are skipped.
pub fn load_csv(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<Dataset> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let header_set: BTreeSet<&str> = header.iter().map(String::as_str).collect();
    let schema_set: BTreeSet<&str> = schema.column_names.iter().map(String::as_str).collect();
    if header_set != schema_set {
        let missing: Vec<_> = schema_set.difference(&header_set).collect();
        let extra: Vec<_> = header_set.difference(&schema_set).collect();
        return Err(Error::SchemaMismatch(format!(
            "missing columns {missing:?}, unexpected columns {extra:?}"
        )));
    }
    let position = |name: &str| header.iter().position(|h| h == name).expect("validated");
    let features = schema.feature_columns();
    let feature_pos: Vec<usize> = features.iter().map(|c| position(c)).collect();
    let target_pos = position(&schema.target_column);

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut skipped = 0usize;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if feature_pos
            .iter()
            .chain(std::iter::once(&target_pos))
            .any(|&p| record.get(p).is_none_or(|s| s.trim().is_empty()))
        {
            skipped += 1;
            continue;
        }
        for (&p, name) in feature_pos.iter().zip(&features) {
            let cell = record.get(p).unwrap_or("").trim();
            values.push(encode_cell(schema, name, cell, row, p + 1)?);
        }
        let cell = record.get(target_pos).unwrap_or("").trim();
        let y = encode_cell(schema, &schema.target_column, cell, row, target_pos + 1)?;
        let label = match schema.target_threshold {
            Some(t) => u8::from(y > t),
            None if y == 0.0 || y == 1.0 => y as u8,
            None => {
                return Err(Error::Parse {
                    row,
                    col: target_pos + 1,
                    value: cell.to_string(),
                })
            }
        };
        labels.push(label);
    }
    let nrows = labels.len();
    let raw = FeatureMatrix::from_flat(nrows, features.len(), values)?;
    let names = features.iter().map(|s| s.to_string()).collect();
    let mut d = Dataset::from_raw(schema.name.clone(), raw, names, Some(labels))?;
    if skipped > 0 {
        d.metadata_mut()
            .warnings
            .push(format!("skipped {skipped} rows with empty cells"));
    }
    let resolve = |name: &String| {
        d.feature_index(name).ok_or_else(|| {
            Error::SchemaMismatch(format!("role column {name:?} is absent or was dropped"))
        })
    };
    let protected = schema.protected_column.as_ref().map(resolve).transpose()?;
    let foils = schema
        .foil_columns
        .iter()
        .map(resolve)
        .collect::<Result<Vec<_>>>()?;
    d.with_protected(protected)?.with_foils(foils)
}

fn encode_cell(schema: &DatasetSchema, column: &str, cell: &str, row: usize, col: usize) -> Result<f64> {
    if let Some(map) = schema.categorical_columns.get(column) {
        return map.get(cell).copied().ok_or_else(|| {
            Error::SchemaMismatch(format!(
                "category {cell:?} in column {column:?} (row {row}) has no encoding"
            ))
        });
    }
    cell.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            row,
            col,
            value: cell.to_string(),
        })
}

/// Writes raw (unstandardized) feature values and labels. Categorical
/// columns are written as their codes.
pub fn write_csv(d: &Dataset, path: impl AsRef<Path>, target_column: &str) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = d.feature_names().iter().map(String::as_str).collect();
    if d.labels().is_some() {
        header.push(target_column);
    }
    w.write_record(&header)?;
    for i in 0..d.n_rows() {
        let mut rec: Vec<String> = d.raw_features().row(i).iter().map(|v| v.to_string()).collect();
        if let Some(l) = d.labels() {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
