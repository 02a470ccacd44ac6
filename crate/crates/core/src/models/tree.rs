use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::FeatureMatrix;
use crate::rng::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            n_trees: 15,
            max_depth: 10,
            min_samples_leaf: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
enum Node {
    Leaf {
        p: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Axis-aligned CART classifier with Gini splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn fit(x: &FeatureMatrix<f64>, y: &[u8], rows: &[usize], max_depth: usize, min_leaf: usize) -> Self {
        let mut tree = Self { nodes: Vec::new() };
        let mut rows = rows.to_vec();
        tree.grow(x, y, &mut rows, 0, max_depth, min_leaf.max(1));
        tree
    }

    fn grow(
        &mut self,
        x: &FeatureMatrix<f64>,
        y: &[u8],
        rows: &mut [usize],
        depth: usize,
        max_depth: usize,
        min_leaf: usize,
    ) -> usize {
        let id = self.nodes.len();
        let pos = rows.iter().filter(|&&r| y[r] == 1).count();
        let p = pos as f64 / rows.len() as f64;
        self.nodes.push(Node::Leaf { p });
        if depth >= max_depth || pos == 0 || pos == rows.len() || rows.len() < 2 * min_leaf {
            return id;
        }
        let Some((feature, threshold)) = best_split(x, y, rows, min_leaf) else {
            return id;
        };
        let mut split = 0;
        for i in 0..rows.len() {
            if x.get(rows[i], feature) <= threshold {
                rows.swap(i, split);
                split += 1;
            }
        }
        let (l, r) = rows.split_at_mut(split);
        let left = self.grow(x, y, l, depth + 1, max_depth, min_leaf);
        let right = self.grow(x, y, r, depth + 1, max_depth, min_leaf);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { p } => return p,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

fn gini(pos: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let p = pos / n;
    2.0 * p * (1.0 - p) * n
}

fn best_split(x: &FeatureMatrix<f64>, y: &[u8], rows: &[usize], min_leaf: usize) -> Option<(usize, f64)> {
    let n = rows.len() as f64;
    let total_pos = rows.iter().filter(|&&r| y[r] == 1).count() as f64;
    let parent = gini(total_pos, n);
    let mut best: Option<(f64, usize, f64)> = None;
    let mut sorted: Vec<(f64, u8)> = Vec::with_capacity(rows.len());
    for f in 0..x.ncols() {
        sorted.clear();
        sorted.extend(rows.iter().map(|&r| (x.get(r, f), y[r])));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left_pos = 0.0;
        for i in 0..sorted.len() - 1 {
            left_pos += f64::from(sorted[i].1);
            if sorted[i].0 == sorted[i + 1].0 {
                continue;
            }
            let nl = (i + 1) as f64;
            if i + 1 < min_leaf || sorted.len() - (i + 1) < min_leaf {
                continue;
            }
            let impurity = gini(left_pos, nl) + gini(total_pos - left_pos, n - nl);
            if impurity < parent - 1e-12 && best.is_none_or(|(b, _, _)| impurity < b) {
                best = Some((impurity, f, 0.5 * (sorted[i].0 + sorted[i + 1].0)));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

/// Bootstrap-aggregated decision trees; probability is the mean leaf
/// frequency over trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggedTrees {
    trees: Vec<DecisionTree>,
}

impl BaggedTrees {
    pub fn fit(x: &FeatureMatrix<f64>, y: &[u8], cfg: &TreeConfig) -> Self {
        let nu = x.nrows();
        let trees = (0..cfg.n_trees.max(1))
            .map(|t| {
                let mut rng = rng_for(cfg.seed, "bagging", t as u64);
                let rows: Vec<usize> = (0..nu).map(|_| rng.random_range(0..nu)).collect();
                DecisionTree::fit(x, y, &rows, cfg.max_depth, cfg.min_samples_leaf)
            })
            .collect();
        Self { trees }
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_proba(x)).sum::<f64>() / self.trees.len() as f64
    }
}
