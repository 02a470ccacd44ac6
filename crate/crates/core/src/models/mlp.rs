use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::sigmoid;
use crate::domain::{Dataset, Predictor};
use crate::error::{Error, Result};
use crate::rng::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub hidden_sizes: Vec<usize>,
    pub l2: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for MlpSpec {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![8],
            l2: 1e-4,
            epochs: 400,
            learning_rate: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    inputs: usize,
    outputs: usize,
    /// Row-major `outputs × inputs`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let w = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                self.bias[o] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    /// `Wᵀ δ`
    fn backward(&self, delta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.inputs];
        for (o, d) in delta.iter().enumerate() {
            let w = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            for (acc, wv) in out.iter_mut().zip(w) {
                *acc += wv * d;
            }
        }
        out
    }
}

/// Fully connected network: tanh hidden layers, sigmoid output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Layer>,
    label: String,
}

struct Trace {
    /// Post-activation values per layer, starting with the input.
    activations: Vec<Vec<f64>>,
    output: f64,
}

impl Mlp {
    fn trace(&self, x: &[f64]) -> Trace {
        let mut activations = vec![x.to_vec()];
        let last = self.layers.len() - 1;
        let mut output = 0.0;
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(activations.last().expect("non-empty"));
            if l == last {
                output = sigmoid(z[0]);
            } else {
                activations.push(z.into_iter().map(f64::tanh).collect());
            }
        }
        Trace {
            activations,
            output,
        }
    }

    /// Back-propagates `∂p/∂z_out = seed` through the hidden layers. Returns
    /// the per-layer pre-activation deltas (output layer last) and the input
    /// gradient.
    fn backprop(&self, t: &Trace, seed: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut deltas = vec![Vec::new(); self.layers.len()];
        let mut delta = vec![seed];
        for l in (0..self.layers.len()).rev() {
            deltas[l] = delta.clone();
            let upstream = self.layers[l].backward(&delta);
            if l == 0 {
                return (deltas, upstream);
            }
            let a = &t.activations[l];
            delta = upstream.iter().zip(a).map(|(g, h)| g * (1.0 - h * h)).collect();
        }
        unreachable!("network has at least one layer")
    }
}

impl Predictor for Mlp {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        self.trace(x).output
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let t = self.trace(x);
        let (_, g) = self.backprop(&t, t.output * (1.0 - t.output));
        Some(g)
    }

    fn descriptor(&self) -> String {
        self.label.clone()
    }
}

/// Full-batch gradient descent on mean log-loss with L2 weight decay.
pub fn train_mlp(d: &Dataset, spec: &MlpSpec) -> Result<Mlp> {
    if spec.hidden_sizes.is_empty() || spec.hidden_sizes.contains(&0) {
        return Err(Error::InvalidConfig("MLP needs at least one non-empty hidden layer".into()));
    }
    let labels = d.labels().ok_or(Error::MissingLabels)?;
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass);
    }
    let mut rng = rng_for(spec.seed, "mlp-init", 0);
    let mut sizes = vec![d.n_features()];
    sizes.extend(&spec.hidden_sizes);
    sizes.push(1);
    let layers = sizes
        .windows(2)
        .map(|w| {
            let scale = (1.0 / w[0] as f64).sqrt();
            Layer {
                inputs: w[0],
                outputs: w[1],
                weights: (0..w[0] * w[1])
                    .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
                bias: vec![0.0; w[1]],
            }
        })
        .collect();
    let mut net = Mlp {
        layers,
        label: format!(
            "mlp(hidden={:?}, l2={}, epochs={}, seed={})",
            spec.hidden_sizes, spec.l2, spec.epochs, spec.seed
        ),
    };
    let nu = d.n_rows() as f64;
    for _ in 0..spec.epochs {
        let mut gw: Vec<Vec<f64>> = net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect();
        let mut gb: Vec<Vec<f64>> = net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect();
        for (i, x) in d.features().rows().enumerate() {
            let t = net.trace(x);
            let (deltas, _) = net.backprop(&t, t.output - f64::from(labels[i]));
            for (l, layer) in net.layers.iter().enumerate() {
                let input = &t.activations[l];
                for (o, dl) in deltas[l].iter().enumerate() {
                    gb[l][o] += dl;
                    let row = &mut gw[l][o * layer.inputs..(o + 1) * layer.inputs];
                    for (g, a) in row.iter_mut().zip(input) {
                        *g += dl * a;
                    }
                }
            }
        }
        for (l, layer) in net.layers.iter_mut().enumerate() {
            for (w, g) in layer.weights.iter_mut().zip(&gw[l]) {
                *w -= spec.learning_rate * (g / nu + spec.l2 * *w);
            }
            for (b, g) in layer.bias.iter_mut().zip(&gb[l]) {
                *b -= spec.learning_rate * g / nu;
            }
        }
    }
    Ok(net)
}
