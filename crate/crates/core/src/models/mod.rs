//! Classifiers behind the [`Predictor`] interface: linear/logistic models,
//! single-feature rules, a small MLP, bagged decision trees and the
//! adversarial scaffold built from them.

mod linear;
mod mlp;
mod rule;
mod scaffold;
mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::Predictor;
use crate::error::Result;

pub use linear::{make_linear_predictor, train_logistic, train_logistic_with, LinearModelSpec, LinearPredictor, LogisticConfig};
pub use mlp::{train_mlp, Mlp, MlpSpec};
pub use rule::{make_rule_predictor, RuleModelSpec, RulePredictor};
pub use scaffold::{
    build_scaffold, train_ood_detector, train_ood_detector_with, OodConfig, OodDetector, Perturbation,
    Scaffold, ScaffoldSpec, DETECTOR_ACCURACY_FLOOR,
};
pub use tree::{BaggedTrees, DecisionTree, TreeConfig};

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Fixed-probability model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantPredictor {
    pub probability: f64,
}

impl Predictor for ConstantPredictor {
    fn predict_proba(&self, _x: &[f64]) -> f64 {
        self.probability
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(vec![0.0; x.len()])
    }

    fn descriptor(&self) -> String {
        format!("constant(p={})", self.probability)
    }
}

/// Any model the crate can persist. Saved as tagged JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Model {
    Linear(LinearPredictor),
    Rule(RulePredictor),
    Mlp(Mlp),
    Scaffold(Scaffold),
    Constant(ConstantPredictor),
}

impl Model {
    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    fn inner(&self) -> &dyn Predictor {
        match self {
            Model::Linear(m) => m,
            Model::Rule(m) => m,
            Model::Mlp(m) => m,
            Model::Scaffold(m) => m,
            Model::Constant(m) => m,
        }
    }
}

impl Predictor for Model {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        self.inner().predict_proba(x)
    }

    fn predict(&self, x: &[f64]) -> u8 {
        self.inner().predict(x)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.inner().gradient(x)
    }

    fn descriptor(&self) -> String {
        self.inner().descriptor()
    }
}

macro_rules! impl_from_model {
    ($($variant:ident($ty:ty)),*) => {
        $(impl From<$ty> for Model {
            fn from(m: $ty) -> Self {
                Model::$variant(m)
            }
        })*
    };
}

impl_from_model!(
    Linear(LinearPredictor),
    Rule(RulePredictor),
    Mlp(Mlp),
    Scaffold(Scaffold),
    Constant(ConstantPredictor)
);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_stable_and_symmetric() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn model_json_round_trip() {
        let m: Model = make_linear_predictor(&LinearModelSpec::new(vec![0.7, 0.3], 0.1), 2)
            .unwrap()
            .into();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        m.save_json(&p).unwrap();
        let back = Model::load_json(&p).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.predict_proba(&[0.2, -1.0]), m.predict_proba(&[0.2, -1.0]));
    }
}
