//! Evaluation of local feature-importance explanations for tabular binary
//! classifiers.
//!
//! The central metric is AXE: an explanation is scored by how well a
//! per-datapoint k-nearest-neighbour model, restricted to the explanation's
//! top-n features, recovers the model's own predictions on the dataset. The
//! crate also ships the ground-truth agreement metrics (FA, RA, SA, SRA, RC,
//! PRA), the perturbation metrics (PGI, PGU), four explainer families, the
//! scaffolding attack used to fairwash explanations, and experiment drivers.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod axe;
pub mod data;
pub mod domain;
pub mod error;
pub mod experiments;
pub mod explainers;
pub mod io;
pub mod metrics;
pub mod models;
pub mod rng;
pub mod scalar;

pub use domain::{
    aggregate_quality, bottom_n_features, importance_order, predict_rows, rank_vector, top_n_features,
    Dataset, Explanation, FeatureMatrix, Predictor, QualityReport, Standardization, REPORT_SCHEMA_VERSION,
};
pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision explanation (the default instantiation).
pub type Explanation64 = Explanation<f64>;
/// Single-precision explanation.
pub type Explanation32 = Explanation<f32>;
pub type FeatureMatrix64 = FeatureMatrix<f64>;
pub type FeatureMatrix32 = FeatureMatrix<f32>;
pub type GroundTruthPair64 = metrics::GroundTruthPair<f64>;
pub type GroundTruthPair32 = metrics::GroundTruthPair<f32>;
