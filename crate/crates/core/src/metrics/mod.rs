//! Explanation quality metrics other than AXE: ground-truth agreement
//! metrics and perturbation-gap metrics.

mod reference;
mod sensitivity;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use reference::{
    feature_agreement, pairwise_rank_agreement, rank_agreement, rank_correlation, reference_report,
    sign_agreement, signed_rank_agreement, GroundTruthPair,
};
pub use sensitivity::{perturbation_draws, pgi, pgi_report, pgu, pgu_report, PerturbConfig};

/// Every metric the crate can compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Fa,
    Ra,
    Sa,
    Sra,
    Rc,
    Pra,
    Pgi,
    Pgu,
    Axe,
}

impl MetricKind {
    pub const ALL: [MetricKind; 9] = [
        MetricKind::Fa,
        MetricKind::Ra,
        MetricKind::Sa,
        MetricKind::Sra,
        MetricKind::Rc,
        MetricKind::Pra,
        MetricKind::Pgi,
        MetricKind::Pgu,
        MetricKind::Axe,
    ];

    pub const GROUND_TRUTH: [MetricKind; 6] = [
        MetricKind::Fa,
        MetricKind::Ra,
        MetricKind::Sa,
        MetricKind::Sra,
        MetricKind::Rc,
        MetricKind::Pra,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Fa => "fa",
            MetricKind::Ra => "ra",
            MetricKind::Sa => "sa",
            MetricKind::Sra => "sra",
            MetricKind::Rc => "rc",
            MetricKind::Pra => "pra",
            MetricKind::Pgi => "pgi",
            MetricKind::Pgu => "pgu",
            MetricKind::Axe => "axe",
        }
    }

    pub fn is_ground_truth(self) -> bool {
        Self::GROUND_TRUTH.contains(&self)
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let lower = s.to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown metric {s:?}")))
    }
}
