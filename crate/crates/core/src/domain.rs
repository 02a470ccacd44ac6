//! Domain types shared by every subsystem: datasets, explanations, the
//! predictor interface and quality reports.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Version stamped into every JSON artifact the crate writes.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix<T = f64> {
    nrows: usize,
    ncols: usize,
    values: Vec<T>,
}

impl<T: Copy> FeatureMatrix<T> {
    pub fn from_flat(nrows: usize, ncols: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != nrows * ncols {
            return Err(Error::LengthMismatch {
                what: "matrix values",
                expected: nrows * ncols,
                found: values.len(),
            });
        }
        Ok(Self {
            nrows,
            ncols,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * ncols);
        for row in rows {
            if row.len() != ncols {
                return Err(Error::LengthMismatch {
                    what: "matrix row",
                    expected: ncols,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            nrows: rows.len(),
            ncols,
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        (0..self.nrows).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.ncols + j]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.ncols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            nrows: indices.len(),
            ncols: self.ncols,
            values,
        }
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> FeatureMatrix<U> {
        FeatureMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Column statistics captured when a dataset is standardized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub std: f64,
}

impl Standardization {
    /// Population mean and standard deviation of `column`.
    pub fn fit(column: &[f64]) -> Self {
        let n = column.len() as f64;
        let mean = column.iter().sum::<f64>() / n;
        let var = column.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub warnings: Vec<String>,
    pub dropped_columns: Vec<String>,
    /// Indices of columns appended synthetically (unrelated foil columns).
    pub synthetic_columns: Vec<usize>,
}

/// A tabular dataset. `features` holds z-scored values; `raw` keeps the
/// values as loaded so splits can re-standardize without drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    id: String,
    features: FeatureMatrix<f64>,
    raw: FeatureMatrix<f64>,
    feature_names: Vec<String>,
    labels: Option<Vec<u8>>,
    standardization: Vec<Standardization>,
    protected_index: Option<usize>,
    foil_indices: Vec<usize>,
    metadata: DatasetMetadata,
}

const ZERO_VARIANCE: f64 = 1e-12;

impl Dataset {
    /// Standardizes `raw` using its own column statistics. Zero-variance
    /// columns are dropped and recorded in the metadata.
    pub fn from_raw(
        id: impl Into<String>,
        raw: FeatureMatrix<f64>,
        feature_names: Vec<String>,
        labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        if feature_names.len() != raw.ncols() {
            return Err(Error::LengthMismatch {
                what: "feature names",
                expected: raw.ncols(),
                found: feature_names.len(),
            });
        }
        if raw.nrows() == 0 {
            return Err(Error::InvalidDataset("dataset has no rows".into()));
        }
        let mut keep = Vec::new();
        let mut stats = Vec::new();
        let mut metadata = DatasetMetadata::default();
        for (j, name) in feature_names.iter().enumerate() {
            let s = Standardization::fit(&raw.column(j));
            if s.std > ZERO_VARIANCE && s.std.is_finite() {
                keep.push(j);
                stats.push(s);
            } else {
                metadata.dropped_columns.push(name.clone());
                metadata
                    .warnings
                    .push(format!("dropped zero-variance column {name:?}"));
            }
        }
        let raw = select_columns(&raw, &keep);
        let names = keep.iter().map(|&j| feature_names[j].clone()).collect();
        let mut d = Self::with_standardization(id, raw, names, labels, stats)?;
        d.metadata = metadata;
        Ok(d)
    }

    /// Standardizes `raw` with externally supplied statistics (e.g. from a
    /// training split).
    pub fn with_standardization(
        id: impl Into<String>,
        raw: FeatureMatrix<f64>,
        feature_names: Vec<String>,
        labels: Option<Vec<u8>>,
        standardization: Vec<Standardization>,
    ) -> Result<Self> {
        let n = raw.ncols();
        if n == 0 || raw.nrows() == 0 {
            return Err(Error::InvalidDataset(
                "dataset needs at least one row and one feature".into(),
            ));
        }
        if feature_names.len() != n || standardization.len() != n {
            return Err(Error::LengthMismatch {
                what: "per-feature metadata",
                expected: n,
                found: feature_names.len().min(standardization.len()),
            });
        }
        if let Some((i, _)) = raw.as_slice().iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, col {}",
                i / n,
                i % n
            )));
        }
        if standardization.iter().any(|s| !(s.std > 0.0)) {
            return Err(Error::InvalidDataset("non-positive stddev".into()));
        }
        if let Some(labels) = &labels {
            if labels.len() != raw.nrows() {
                return Err(Error::LengthMismatch {
                    what: "labels",
                    expected: raw.nrows(),
                    found: labels.len(),
                });
            }
            if labels.iter().any(|&y| y > 1) {
                return Err(Error::InvalidDataset("labels must be 0 or 1".into()));
            }
        }
        let mut values = Vec::with_capacity(raw.as_slice().len());
        for row in raw.rows() {
            values.extend(row.iter().zip(&standardization).map(|(&v, s)| s.apply(v)));
        }
        let features = FeatureMatrix::from_flat(raw.nrows(), n, values)?;
        Ok(Self {
            id: id.into(),
            features,
            raw,
            feature_names,
            labels,
            standardization,
            protected_index: None,
            foil_indices: Vec::new(),
            metadata: DatasetMetadata::default(),
        })
    }

    pub fn with_protected(mut self, index: Option<usize>) -> Result<Self> {
        self.protected_index = index;
        self.validate_roles()?;
        Ok(self)
    }

    pub fn with_foils(mut self, foils: Vec<usize>) -> Result<Self> {
        self.foil_indices = foils;
        self.validate_roles()?;
        Ok(self)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    fn validate_roles(&self) -> Result<()> {
        let n = self.n_features();
        let mut seen = Vec::new();
        for &i in self.protected_index.iter().chain(&self.foil_indices) {
            if i >= n {
                return Err(Error::IndexOutOfRange {
                    what: "feature",
                    index: i,
                    size: n,
                });
            }
            if seen.contains(&i) {
                return Err(Error::InvalidDataset(format!(
                    "feature {i} assigned to more than one role"
                )));
            }
            seen.push(i);
        }
        Ok(())
    }

    /// Appends a column and standardizes it with its own statistics.
    pub fn append_column(
        mut self,
        name: impl Into<String>,
        raw_values: &[f64],
        synthetic: bool,
    ) -> Result<Self> {
        if raw_values.len() != self.n_rows() {
            return Err(Error::LengthMismatch {
                what: "appended column",
                expected: self.n_rows(),
                found: raw_values.len(),
            });
        }
        let s = Standardization::fit(raw_values);
        if !(s.std > ZERO_VARIANCE) {
            return Err(Error::InvalidDataset("appended column is constant".into()));
        }
        let n = self.n_features();
        let mut raw = Vec::with_capacity(self.n_rows() * (n + 1));
        for (row, &v) in self.raw.rows().zip(raw_values) {
            raw.extend_from_slice(row);
            raw.push(v);
        }
        let mut z = Vec::with_capacity(raw.len());
        for (row, &v) in self.features.rows().zip(raw_values) {
            z.extend_from_slice(row);
            z.push(s.apply(v));
        }
        self.raw = FeatureMatrix::from_flat(self.n_rows(), n + 1, raw)?;
        self.features = FeatureMatrix::from_flat(self.n_rows(), n + 1, z)?;
        self.feature_names.push(name.into());
        self.standardization.push(s);
        if synthetic {
            self.metadata.synthetic_columns.push(n);
        }
        Ok(self)
    }

    /// Row subset keeping the current standardization.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut d = self.clone();
        d.raw = self.raw.select_rows(indices);
        d.features = self.features.select_rows(indices);
        d.labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        d
    }

    /// Re-standardizes every column with `standardization`.
    pub fn restandardize(&self, standardization: Vec<Standardization>) -> Result<Self> {
        let mut d = Self::with_standardization(
            self.id.clone(),
            self.raw.clone(),
            self.feature_names.clone(),
            self.labels.clone(),
            standardization,
        )?;
        d.protected_index = self.protected_index;
        d.foil_indices = self.foil_indices.clone();
        d.metadata = self.metadata.clone();
        Ok(d)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Standardized feature matrix.
    pub fn features(&self) -> &FeatureMatrix<f64> {
        &self.features
    }

    pub fn raw_features(&self) -> &FeatureMatrix<f64> {
        &self.raw
    }

    /// Standardized row `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn standardization(&self) -> &[Standardization] {
        &self.standardization
    }

    pub fn protected_index(&self) -> Option<usize> {
        self.protected_index
    }

    pub fn foil_indices(&self) -> &[usize] {
        &self.foil_indices
    }

    pub fn metadata(&self) -> &DatasetMetadata {
        &self.metadata
    }

    pub fn metadata_mut(&mut self) -> &mut DatasetMetadata {
        &mut self.metadata
    }
}

fn select_columns(m: &FeatureMatrix<f64>, cols: &[usize]) -> FeatureMatrix<f64> {
    let mut values = Vec::with_capacity(m.nrows() * cols.len());
    for row in m.rows() {
        values.extend(cols.iter().map(|&j| row[j]));
    }
    FeatureMatrix {
        nrows: m.nrows(),
        ncols: cols.len(),
        values,
    }
}

/// Signed feature-importance vector for one datapoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation<T = f64> {
    pub importances: Vec<T>,
    pub datapoint_index: usize,
    pub explainer_tag: String,
}

impl<T: Scalar> Explanation<T> {
    pub fn new(importances: Vec<T>, datapoint_index: usize, explainer_tag: impl Into<String>) -> Self {
        Self {
            importances,
            datapoint_index,
            explainer_tag: explainer_tag.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.importances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.importances.is_empty()
    }

    pub fn top_n(&self, n: usize) -> Result<Vec<usize>> {
        top_n_features(&self.importances, n)
    }

    pub fn bottom_n(&self, n: usize) -> Result<Vec<usize>> {
        bottom_n_features(&self.importances, n)
    }

    pub fn ranks(&self) -> Vec<T> {
        rank_vector(&self.importances)
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            importances: self.importances.iter().map(|&v| v * c).collect(),
            datapoint_index: self.datapoint_index,
            explainer_tag: self.explainer_tag.clone(),
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.importances.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "explanation for row {} has non-finite importances",
                self.datapoint_index
            )))
        }
    }
}

/// Feature indices ordered by |importance| descending, ties by ascending
/// index.
pub fn importance_order<T: Scalar>(importances: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..importances.len()).collect();
    idx.sort_by(|&a, &b| {
        importances[b]
            .abs()
            .partial_cmp(&importances[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

/// The `n` most important features.
pub fn top_n_features<T: Scalar>(importances: &[T], n: usize) -> Result<Vec<usize>> {
    if n > importances.len() {
        return Err(Error::NExceedsFeatureCount {
            n,
            features: importances.len(),
        });
    }
    let mut order = importance_order(importances);
    order.truncate(n);
    Ok(order)
}

/// The `n` least important features: |importance| ascending, ties by
/// ascending index.
pub fn bottom_n_features<T: Scalar>(importances: &[T], n: usize) -> Result<Vec<usize>> {
    if n > importances.len() {
        return Err(Error::NExceedsFeatureCount {
            n,
            features: importances.len(),
        });
    }
    let mut idx: Vec<usize> = (0..importances.len()).collect();
    idx.sort_by(|&a, &b| {
        importances[a]
            .abs()
            .partial_cmp(&importances[b].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.truncate(n);
    Ok(idx)
}

/// Fractional ranks of |importance|: rank 1 is the largest magnitude and
/// tied magnitudes share the mean of their positions.
pub fn rank_vector<T: Scalar>(importances: &[T]) -> Vec<T> {
    let order = importance_order(importances);
    let mut ranks = vec![T::zero(); importances.len()];
    let mut start = 0;
    while start < order.len() {
        let mag = importances[order[start]].abs();
        let mut end = start + 1;
        while end < order.len() && importances[order[end]].abs() == mag {
            end += 1;
        }
        // positions start+1 ..= end
        let mean_rank = T::of((start + 1 + end) as f64 / 2.0);
        for &i in &order[start..end] {
            ranks[i] = mean_rank;
        }
        start = end;
    }
    ranks
}

/// Arithmetic mean of per-point quality values.
pub fn aggregate_quality<T: Scalar>(per_point: &[T]) -> Result<T> {
    if per_point.is_empty() {
        return Err(Error::EmptyQualityList);
    }
    if per_point.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("non-finite quality value".into()));
    }
    let sum: T = per_point.iter().copied().sum();
    Ok(sum / T::of(per_point.len() as f64))
}

/// Uniform interface over trained, rule-based and adversarial models.
pub trait Predictor: Send + Sync {
    fn predict_proba(&self, x: &[f64]) -> f64;

    /// Binarization at 0.5.
    fn predict(&self, x: &[f64]) -> u8 {
        u8::from(self.predict_proba(x) >= 0.5)
    }

    /// Gradient of `predict_proba`, when the model is differentiable.
    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn descriptor(&self) -> String;
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        (**self).predict_proba(x)
    }
    fn predict(&self, x: &[f64]) -> u8 {
        (**self).predict(x)
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        (**self).gradient(x)
    }
    fn descriptor(&self) -> String {
        (**self).descriptor()
    }
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        (**self).predict_proba(x)
    }
    fn predict(&self, x: &[f64]) -> u8 {
        (**self).predict(x)
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        (**self).gradient(x)
    }
    fn descriptor(&self) -> String {
        (**self).descriptor()
    }
}

/// Model outputs on every row of `d`, in row order.
pub fn predict_rows<P: Predictor + ?Sized>(m: &P, d: &Dataset) -> Vec<u8> {
    (0..d.n_rows())
        .into_par_iter()
        .map(|i| m.predict(d.row(i)))
        .collect()
}

/// Per-datapoint quality plus its mean, for one (dataset, model,
/// explanation set, metric) combination. `None` marks an undefined point
/// (rank correlation on a constant ranking); the aggregate is taken over
/// defined points and is itself `None` when none are defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub schema_version: u32,
    pub metric_name: String,
    pub hyperparams: BTreeMap<String, serde_json::Value>,
    pub per_point_q: Vec<Option<f64>>,
    pub aggregate_q: Option<f64>,
    pub undefined_points: usize,
    pub dataset_id: String,
    pub model_descriptor: String,
    pub explainer_tag: String,
}

impl QualityReport {
    pub fn new(metric_name: impl Into<String>, per_point_q: Vec<Option<f64>>) -> Result<Self> {
        if per_point_q.is_empty() {
            return Err(Error::EmptyQualityList);
        }
        let defined: Vec<f64> = per_point_q.iter().flatten().copied().collect();
        let aggregate_q = if defined.is_empty() {
            None
        } else {
            Some(aggregate_quality(&defined)?)
        };
        Ok(Self {
            schema_version: REPORT_SCHEMA_VERSION,
            metric_name: metric_name.into(),
            hyperparams: BTreeMap::new(),
            undefined_points: per_point_q.len() - defined.len(),
            per_point_q,
            aggregate_q,
            dataset_id: String::new(),
            model_descriptor: String::new(),
            explainer_tag: String::new(),
        })
    }

    pub fn from_values(metric_name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        Self::new(metric_name, values.into_iter().map(Some).collect())
    }

    pub fn with_param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.hyperparams.insert(key.to_string(), value.into());
        self
    }

    pub fn with_context(
        mut self,
        dataset_id: impl Into<String>,
        model_descriptor: impl Into<String>,
        explainer_tag: impl Into<String>,
    ) -> Self {
        self.dataset_id = dataset_id.into();
        self.model_descriptor = model_descriptor.into();
        self.explainer_tag = explainer_tag.into();
        self
    }

    pub fn is_undefined(&self) -> bool {
        self.aggregate_q.is_none()
    }
}
