use crate::featurize::SparseRow;

use super::LearnError;

/// Training data held both row-wise and column-wise without densifying.
#[derive(Debug, Clone)]
pub struct Design {
    n_cols: usize,
    rows: Vec<SparseRow>,
    col_ptr: Vec<usize>,
    col_rows: Vec<u32>,
    col_vals: Vec<f64>,
}

impl Design {
    pub fn new(rows: &[SparseRow], n_cols: usize) -> Result<Self, LearnError> {
        let mut counts = vec![0usize; n_cols + 1];
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter() {
                if c >= n_cols {
                    return Err(LearnError::ShapeMismatch { expected: n_cols, found: c + 1 });
                }
                if !v.is_finite() {
                    return Err(LearnError::NonFiniteFeature { row: r, col: c });
                }
                counts[c + 1] += 1;
            }
        }
        for c in 0..n_cols {
            counts[c + 1] += counts[c];
        }
        let col_ptr = counts.clone();
        let nnz = col_ptr[n_cols];
        let mut col_rows = vec![0u32; nnz];
        let mut col_vals = vec![0.0; nnz];
        let mut next = counts;
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter() {
                col_rows[next[c]] = r as u32;
                col_vals[next[c]] = v;
                next[c] += 1;
            }
        }
        Ok(Self { n_cols, rows: rows.to_vec(), col_ptr, col_rows, col_vals })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self, LearnError> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let sparse: Vec<SparseRow> = rows.iter().map(|r| dense_to_sparse(r)).collect();
        Self::new(&sparse, n_cols)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.rows[row].get(col)
    }

    /// Row indices and values of the nonzeros in a column.
    pub fn column(&self, col: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.col_ptr[col], self.col_ptr[col + 1]);
        (&self.col_rows[a..b], &self.col_vals[a..b])
    }

    pub fn column_nnz(&self, col: usize) -> usize {
        self.col_ptr[col + 1] - self.col_ptr[col]
    }

    /// True when every row carries the same value in every column.
    pub fn all_rows_identical(&self) -> bool {
        match self.rows.split_first() {
            None => true,
            Some((first, rest)) => rest.iter().all(|r| r == first),
        }
    }
}

pub fn dense_to_sparse(row: &[f64]) -> SparseRow {
    SparseRow::from_pairs(row.iter().enumerate().map(|(i, &v)| (i as u32, v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csc_matches_rows() {
        let d = Design::from_dense(&[vec![0.0, 2.0, 0.0], vec![1.0, 0.0, 3.0], vec![4.0, 5.0, 0.0]]).unwrap();
        assert_eq!(d.column(0), (&[1u32, 2][..], &[1.0, 4.0][..]));
        assert_eq!(d.column(2), (&[1u32][..], &[3.0][..]));
        assert_eq!(d.value(2, 1), 5.0);
        assert_eq!(d.value(0, 0), 0.0);
        assert!(!d.all_rows_identical());
        assert!(matches!(Design::from_dense(&[vec![f64::NAN]]), Err(LearnError::NonFiniteFeature { row: 0, col: 0 })));
    }
}
