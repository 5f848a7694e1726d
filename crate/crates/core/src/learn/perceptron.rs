use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::design::Design;
use super::{sigmoid, PctParams};
use crate::featurize::SparseRow;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perceptron {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub epochs_run: usize,
    pub converged: bool,
}

pub(crate) fn fit(design: &Design, labels: &[u8], params: &PctParams, seed_value: u64) -> Perceptron {
    let mut w = vec![0.0; design.n_cols()];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..design.n_rows()).collect();
    let mut rng = seed::rng(seed_value, &["pct"]);
    let mut epochs_run = 0;
    let mut converged = false;
    for _ in 0..params.epochs {
        epochs_run += 1;
        order.shuffle(&mut rng);
        let mut errors = 0usize;
        for &i in &order {
            let row = &design.rows()[i];
            let y = if labels[i] == 1 { 1.0 } else { -1.0 };
            let margin: f64 = b + row.iter().map(|(c, v)| w[c] * v).sum::<f64>();
            if y * margin <= 0.0 {
                for (c, v) in row.iter() {
                    w[c] += params.learning_rate * y * v;
                }
                b += params.learning_rate * y;
                errors += 1;
            }
        }
        if errors == 0 {
            converged = true;
            break;
        }
    }
    Perceptron { weights: w, bias: b, epochs_run, converged }
}

impl Perceptron {
    pub fn margin(&self, row: &SparseRow) -> f64 {
        self.bias + row.iter().map(|(c, v)| self.weights[c] * v).sum::<f64>()
    }

    pub fn predict_proba(&self, row: &SparseRow) -> f64 {
        sigmoid(self.margin(row))
    }
}
