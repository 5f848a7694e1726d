use serde::{Deserialize, Serialize};

use super::Distance;
use crate::featurize::SparseRow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub distance: Distance,
    pub rows: Vec<SparseRow>,
    pub labels: Vec<u8>,
}

fn dot(a: &SparseRow, b: &SparseRow) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.indices.len() && j < b.indices.len() {
        match a.indices[i].cmp(&b.indices[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a.values[i] * b.values[j];
                i += 1;
                j += 1;
            }
        }
    }
    s
}

fn squared_euclidean(a: &SparseRow, b: &SparseRow) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.indices.len() || j < b.indices.len() {
        let ai = a.indices.get(i).copied().unwrap_or(u32::MAX);
        let bj = b.indices.get(j).copied().unwrap_or(u32::MAX);
        let d = if ai < bj {
            i += 1;
            a.values[i - 1]
        } else if bj < ai {
            j += 1;
            b.values[j - 1]
        } else {
            i += 1;
            j += 1;
            a.values[i - 1] - b.values[j - 1]
        };
        s += d * d;
    }
    s
}

pub fn distance(kind: Distance, a: &SparseRow, b: &SparseRow) -> f64 {
    match kind {
        Distance::Euclidean => squared_euclidean(a, b).sqrt(),
        Distance::Cosine => {
            let na = dot(a, a).sqrt();
            let nb = dot(b, b).sqrt();
            if na == 0.0 || nb == 0.0 {
                1.0
            } else {
                (1.0 - dot(a, b) / (na * nb)).max(0.0)
            }
        }
    }
}

impl Knn {
    /// Share of class-1 votes among the k nearest training rows. Every row
    /// tied with the k-th distance votes.
    pub fn predict_proba(&self, row: &SparseRow) -> f64 {
        let mut d: Vec<(f64, u8)> =
            self.rows.iter().zip(&self.labels).map(|(r, &l)| (distance(self.distance, row, r), l)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        let k = self.k.min(d.len());
        let cutoff = d[k - 1].0;
        let tol = 1e-12 * cutoff.abs().max(1.0);
        let voters: Vec<u8> = d.iter().take_while(|(x, _)| *x <= cutoff + tol).map(|(_, l)| *l).collect();
        voters.iter().filter(|&&l| l == 1).count() as f64 / voters.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::design::dense_to_sparse;

    #[test]
    fn distances() {
        let a = dense_to_sparse(&[3.0, 0.0, 1.0]);
        let b = dense_to_sparse(&[0.0, 4.0, 1.0]);
        assert!((distance(Distance::Euclidean, &a, &b) - 5.0).abs() < 1e-12);
        let c = dense_to_sparse(&[6.0, 0.0, 2.0]);
        assert!(distance(Distance::Cosine, &a, &c).abs() < 1e-12);
        assert_eq!(distance(Distance::Cosine, &a, &SparseRow::default()), 1.0);
    }

    #[test]
    fn ties_at_kth_distance_all_vote() {
        let rows: Vec<SparseRow> = [[0.0], [1.0], [-1.0], [5.0]].iter().map(|r| dense_to_sparse(r)).collect();
        let knn = Knn { k: 2, distance: Distance::Euclidean, rows, labels: vec![1, 0, 1, 0] };
        // distances 0,1,1,5: three voters, two of them class 1
        assert!((knn.predict_proba(&SparseRow::default()) - 2.0 / 3.0).abs() < 1e-12);
    }
}
