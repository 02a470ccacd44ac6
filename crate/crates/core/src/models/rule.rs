use serde::{Deserialize, Serialize};

use crate::domain::Predictor;
use crate::error::{Error, Result};

/// `1[x_f > threshold]`, or its inversion when `positive_above` is false.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleModelSpec {
    pub feature_index: usize,
    pub threshold: f64,
    pub positive_above: bool,
}

impl RuleModelSpec {
    pub fn above(feature_index: usize, threshold: f64) -> Self {
        Self {
            feature_index,
            threshold,
            positive_above: true,
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> u8 {
        u8::from((x[self.feature_index] > self.threshold) == self.positive_above)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RulePredictor {
    pub spec: RuleModelSpec,
}

impl Predictor for RulePredictor {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        f64::from(self.spec.evaluate(x))
    }

    fn predict(&self, x: &[f64]) -> u8 {
        self.spec.evaluate(x)
    }

    fn descriptor(&self) -> String {
        format!(
            "rule(x{} {} {})",
            self.spec.feature_index,
            if self.spec.positive_above { ">" } else { "<=" },
            self.spec.threshold
        )
    }
}

pub fn make_rule_predictor(spec: &RuleModelSpec, n_features: usize) -> Result<RulePredictor> {
    if spec.feature_index >= n_features {
        return Err(Error::IndexOutOfRange {
            what: "rule feature",
            index: spec.feature_index,
            size: n_features,
        });
    }
    Ok(RulePredictor { spec: spec.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rule_examples() {
        let m = make_rule_predictor(&RuleModelSpec::above(1, 0.0), 3).unwrap();
        assert_eq!(m.predict(&[-5.0, 1.0, 3.0]), 1);
        assert_eq!(m.predict(&[5.0, -1.0, 3.0]), 0);
        assert!(m.gradient(&[0.0, 1.0, 0.0]).is_none());
        assert!(make_rule_predictor(&RuleModelSpec::above(3, 0.0), 3).is_err());
    }

    proptest! {
        #[test]
        fn inversion_flips_every_prediction(x in prop::collection::vec(-3.0f64..3.0, 3), t in -1.0f64..1.0) {
            let up = RuleModelSpec::above(2, t);
            let down = RuleModelSpec { positive_above: false, ..up.clone() };
            prop_assert_eq!(up.evaluate(&x) + down.evaluate(&x), 1);
        }

        #[test]
        fn only_rule_feature_matters(x in prop::collection::vec(-3.0f64..3.0, 4), other in -3.0f64..3.0, j in 1usize..4) {
            let m = RulePredictor { spec: RuleModelSpec::above(0, 0.1) };
            let mut y = x.clone();
            y[j] = other;
            prop_assert_eq!(m.predict(&x), m.predict(&y));
        }
    }
}
