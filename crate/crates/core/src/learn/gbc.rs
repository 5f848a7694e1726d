use serde::{Deserialize, Serialize};

use super::design::Design;
use super::tree::{build_tree, Criterion, Sample, Tree, TreeParams};
use super::{normalize_importances, sigmoid, GbcParams};
use crate::featurize::SparseRow;

/// Additive log-odds model of regression trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

pub(crate) fn fit(design: &Design, labels: &[u8], params: &GbcParams) -> (GradientBoosting, Vec<f64>) {
    let n = design.n_rows();
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let prior = y.iter().sum::<f64>() / n as f64;
    let init = (prior / (1.0 - prior)).ln();
    let mut score = vec![init; n];
    let tree_params = TreeParams {
        criterion: Criterion::Variance,
        max_depth: Some(params.max_depth),
        min_leaf: params.min_leaf,
        max_features: None,
    };
    let mut trees = Vec::with_capacity(params.n_stages);
    let mut total = vec![0.0; design.n_cols()];
    for _ in 0..params.n_stages {
        let prob: Vec<f64> = score.iter().map(|&f| sigmoid(f)).collect();
        let samples = (0..n).map(|i| Sample { row: i as u32, weight: 1.0, target: y[i] - prob[i] }).collect();
        let (mut tree, imp) = build_tree(design, samples, tree_params, None);
        for (t, v) in total.iter_mut().zip(&imp) {
            *t += v;
        }
        // Newton step per leaf
        let leaf_of: Vec<usize> = design.rows().iter().map(|r| tree.apply(r)).collect();
        let mut num = vec![0.0; tree.nodes.len()];
        let mut den = vec![0.0; tree.nodes.len()];
        for i in 0..n {
            num[leaf_of[i]] += y[i] - prob[i];
            den[leaf_of[i]] += prob[i] * (1.0 - prob[i]);
        }
        for leaf in tree.leaf_ids() {
            let v = if den[leaf].abs() < 1e-150 { 0.0 } else { num[leaf] / den[leaf] };
            tree.set_leaf_value(leaf, v);
        }
        for i in 0..n {
            score[i] += params.learning_rate * tree.leaf_value(leaf_of[i]);
        }
        trees.push(tree);
    }
    (GradientBoosting { init, learning_rate: params.learning_rate, trees }, normalize_importances(total))
}

impl GradientBoosting {
    pub fn decision(&self, row: &SparseRow) -> f64 {
        self.init + self.learning_rate * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    pub fn predict_proba(&self, row: &SparseRow) -> f64 {
        sigmoid(self.decision(row))
    }
}
