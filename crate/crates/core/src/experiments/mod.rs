//! Experiment drivers: region grids over two-feature explanations, the
//! fairwashing detection table, the principle matrix and the explainer
//! disagreement demo.

mod disagreement;
mod fairwash;
mod principles;
mod region;

pub use disagreement::{explainer_disagreement, DisagreementReport};
pub use fairwash::{
    append_unrelated_foils, build_attack_bundle, run_fairwash_detection, run_fairwash_detection_with, detection_datasets, AttackBundle,
    AttackConfig, AttackModel, DetectionMetric, DetectionVerdict,
};
pub use principles::{
    principle_matrix, run_principle_suite, Fixtures, ManifoldPatched, Outcome, PrincipleResult, Witness,
};
pub use region::{region_label, run_region_grid, GridMetric, RegionGrid, RegionGridSpec, RegionSummary};
