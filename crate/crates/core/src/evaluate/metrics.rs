use serde::{Deserialize, Serialize};

use super::stats::midranks;
use super::EvalError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn from_predictions(labels: &[u8], predictions: &[u8]) -> Self {
        let mut c = ConfusionCounts::default();
        for (&y, &p) in labels.iter().zip(predictions) {
            match (y, p) {
                (1, 1) => c.tp += 1,
                (0, 1) => c.fp += 1,
                (0, _) => c.tn += 1,
                _ => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Confusion-based scores. Undefined ratios are reported as 0 and flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub confusion: ConfusionCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Area under the ROC curve as a normalized Mann-Whitney statistic with
/// midranks for tied scores.
pub fn auc(labels: &[u8], scores: &[f64]) -> Result<f64, EvalError> {
    if labels.len() != scores.len() {
        return Err(EvalError::LengthMismatch(labels.len(), scores.len()));
    }
    let n1 = labels.iter().filter(|&&l| l == 1).count();
    let n0 = labels.len() - n1;
    if n1 == 0 || n0 == 0 {
        return Err(EvalError::SingleClassAuc);
    }
    let ranks = midranks(scores, 0.0);
    let r1: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l == 1).map(|(r, _)| r).sum();
    let u = r1 - (n1 * (n1 + 1)) as f64 / 2.0;
    Ok(u / (n1 as f64 * n0 as f64))
}

pub fn metrics(labels: &[u8], predictions: &[u8], probabilities: Option<&[f64]>) -> Result<Metrics, EvalError> {
    if labels.len() != predictions.len() {
        return Err(EvalError::LengthMismatch(labels.len(), predictions.len()));
    }
    let c = ConfusionCounts::from_predictions(labels, predictions);
    let (precision, precision_undefined) = ratio(c.tp, c.tp + c.fp);
    let (recall, recall_undefined) = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    let auc = match probabilities {
        Some(p) => match auc(labels, p) {
            Ok(a) => Some(a),
            Err(EvalError::SingleClassAuc) => None,
            Err(e) => return Err(e),
        },
        None => None,
    };
    Ok(Metrics { confusion: c, precision, recall, f1, auc, precision_undefined, recall_undefined })
}

/// One (project, combo, model) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub project: String,
    pub combo: String,
    pub model: String,
    pub n_features: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub flags: String,
}

impl EvalRow {
    pub fn new(project: &str, combo: &str, model: &str, n_features: usize, m: &Metrics) -> Self {
        let mut flags = Vec::new();
        if m.precision_undefined {
            flags.push("precision_undefined");
        }
        if m.recall_undefined {
            flags.push("recall_undefined");
        }
        if m.auc.is_none() {
            flags.push("auc_undefined");
        }
        Self {
            project: project.into(),
            combo: combo.into(),
            model: model.into(),
            n_features,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            auc: m.auc,
            tp: m.confusion.tp,
            fp: m.confusion.fp,
            tn: m.confusion.tn,
            fn_: m.confusion.fn_,
            flags: flags.join("|"),
        }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "precision" => Some(self.precision),
            "recall" => Some(self.recall),
            "f1" => Some(self.f1),
            "auc" => self.auc,
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn brute_auc(labels: &[u8], scores: &[f64]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..labels.len() {
            for j in 0..labels.len() {
                if labels[i] == 1 && labels[j] == 0 {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn worked_counts() {
        let labels = [1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
        let preds = [1, 1, 1, 1, 0, 0, 0, 0, 0, 0];
        let m = metrics(&labels, &preds, None).unwrap();
        assert_eq!(m.confusion, ConfusionCounts { tp: 3, fp: 1, tn: 6, fn_: 0 });
        assert_eq!(m.precision, 0.75);
        assert_eq!(m.recall, 1.0);
        assert!((m.f1 - 6.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn undefined_ratios_are_zero_and_flagged() {
        let m = metrics(&[1, 0], &[0, 0], Some(&[0.2, 0.2])).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert!(m.precision_undefined && !m.recall_undefined);
        assert_eq!(m.auc, Some(0.5));
        let m = metrics(&[0, 0], &[0, 1], Some(&[0.1, 0.9])).unwrap();
        assert!(m.recall_undefined && m.auc.is_none());
        let row = EvalRow::new("p", "GS", "rf", 3, &m);
        assert_eq!(row.flags, "recall_undefined|auc_undefined");
        assert!(matches!(metrics(&[1], &[1, 0], None), Err(EvalError::LengthMismatch(1, 2))));
    }

    #[test]
    fn perfect_separation() {
        assert_eq!(auc(&[0, 0, 1, 1], &[0.1, 0.2, 0.8, 0.9]).unwrap(), 1.0);
        assert_eq!(auc(&[1, 1, 0, 0], &[0.1, 0.2, 0.8, 0.9]).unwrap(), 0.0);
        assert!(matches!(auc(&[1, 1], &[0.1, 0.2]), Err(EvalError::SingleClassAuc)));
    }

    #[test]
    fn matches_brute_force_on_random_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let n = rng.gen_range(2..40);
            let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..6)) / 5.0).collect();
            if labels.iter().all(|&l| l == labels[0]) {
                continue;
            }
            assert!((auc(&labels, &scores).unwrap() - brute_auc(&labels, &scores)).abs() < 1e-12);
        }
    }

    #[test]
    fn bounds_and_f1_between_p_and_r() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..300 {
            let n = rng.gen_range(1..30);
            let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let preds: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let m = metrics(&labels, &preds, None).unwrap();
            for v in [m.precision, m.recall, m.f1] {
                assert!((0.0..=1.0).contains(&v));
            }
            if m.precision > 0.0 && m.recall > 0.0 {
                assert!(m.f1 <= m.precision.max(m.recall) + 1e-15);
                assert!(m.f1 >= m.precision.min(m.recall) - 1e-15);
            }
            assert_eq!(m.confusion.total(), n);
        }
    }
}
