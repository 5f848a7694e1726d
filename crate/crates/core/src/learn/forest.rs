use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::Design;
use super::tree::{build_tree, Criterion, Sample, Tree, TreeParams};
use super::{normalize_importances, MaxFeatures, RfParams};
use crate::featurize::SparseRow;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<Tree>,
}

pub(crate) fn fit(design: &Design, labels: &[u8], params: &RfParams, seed_value: u64) -> (RandomForest, Vec<f64>) {
    let n = design.n_rows();
    let p = design.n_cols();
    let max_features = match params.max_features {
        MaxFeatures::All => p,
        MaxFeatures::Sqrt => (p as f64).sqrt().floor() as usize,
        MaxFeatures::Log2 => (p as f64).log2().floor() as usize,
        MaxFeatures::Count(k) => k.min(p),
    }
    .max(1);
    let tree_params = TreeParams {
        criterion: Criterion::Gini,
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        max_features: Some(max_features),
    };
    let grown: Vec<(Tree, Vec<f64>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(seed_value, &["rf", &t.to_string()]);
            let mut counts = vec![0u32; n];
            if params.bootstrap {
                for _ in 0..n {
                    counts[rng.gen_range(0..n)] += 1;
                }
            } else {
                counts.fill(1);
            }
            let samples = counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(r, &c)| Sample { row: r as u32, weight: f64::from(c), target: f64::from(labels[r]) })
                .collect();
            build_tree(design, samples, tree_params, Some(&mut rng))
        })
        .collect();

    let mut total = vec![0.0; p];
    for (_, imp) in &grown {
        let s: f64 = imp.iter().sum();
        if s > 0.0 {
            for (t, v) in total.iter_mut().zip(imp) {
                *t += v / s;
            }
        }
    }
    let trees = grown.into_iter().map(|(t, _)| t).collect();
    (RandomForest { trees }, normalize_importances(total))
}

impl RandomForest {
    /// Fraction of trees voting for class 1.
    pub fn predict_proba(&self, row: &SparseRow) -> f64 {
        let votes = self.trees.iter().filter(|t| t.predict(row) >= 0.5).count();
        votes as f64 / self.trees.len() as f64
    }
}
