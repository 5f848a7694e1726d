use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::design::Design;
use crate::featurize::SparseRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Targets are 0/1 labels; leaves hold the weighted fraction of ones.
    Gini,
    /// Targets are reals; leaves hold the weighted mean.
    Variance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub criterion: Criterion,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Non-constant features examined per node; all when `None`.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "snake_case")]
pub enum TreeNode {
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
    Leaf { value: f64, weight: f64 },
}

/// Binary tree sending `x[feature] <= threshold` to the left child.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

/// One step of a root-to-leaf path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathStep {
    pub feature: usize,
    pub threshold: f64,
    pub went_left: bool,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Self { nodes: vec![TreeNode::Leaf { value, weight: 0.0 }] }
    }

    pub fn apply_with(&self, value: impl Fn(usize) -> f64) -> usize {
        let mut id = 0usize;
        loop {
            match &self.nodes[id] {
                TreeNode::Leaf { .. } => return id,
                TreeNode::Split { feature, threshold, left, right } => {
                    id = if value(*feature as usize) <= *threshold { *left } else { *right } as usize;
                }
            }
        }
    }

    /// Index of the leaf reached by `row`.
    pub fn apply(&self, row: &SparseRow) -> usize {
        self.apply_with(|c| row.get(c))
    }

    pub fn leaf_value(&self, id: usize) -> f64 {
        match self.nodes[id] {
            TreeNode::Leaf { value, .. } => value,
            TreeNode::Split { .. } => panic!("node {id} is not a leaf"),
        }
    }

    pub fn set_leaf_value(&mut self, id: usize, v: f64) {
        if let TreeNode::Leaf { value, .. } = &mut self.nodes[id] {
            *value = v;
        }
    }

    pub fn predict(&self, row: &SparseRow) -> f64 {
        self.leaf_value(self.apply(row))
    }

    pub fn predict_dense(&self, row: &[f64]) -> f64 {
        self.leaf_value(self.apply_with(|c| row[c]))
    }

    pub fn decision_path_dense(&self, row: &[f64]) -> Vec<PathStep> {
        let mut out = Vec::new();
        let mut id = 0usize;
        while let TreeNode::Split { feature, threshold, left, right } = &self.nodes[id] {
            let went_left = row[*feature as usize] <= *threshold;
            out.push(PathStep { feature: *feature as usize, threshold: *threshold, went_left });
            id = if went_left { *left } else { *right } as usize;
        }
        out
    }

    pub fn leaf_ids(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| matches!(self.nodes[i], TreeNode::Leaf { .. })).collect()
    }

    pub fn split_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Split { .. })).count()
    }
}

/// A training row with its multiplicity and target.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub row: u32,
    pub weight: f64,
    pub target: f64,
}

#[derive(Debug, Clone, Copy)]
struct Stats {
    count: usize,
    w: f64,
    s: f64,
}

impl Stats {
    const ZERO: Stats = Stats { count: 0, w: 0.0, s: 0.0 };

    fn add(&mut self, count: usize, w: f64, s: f64) {
        self.count += count;
        self.w += w;
        self.s += s;
    }

    fn minus(self, o: Stats) -> Stats {
        Stats { count: self.count - o.count, w: self.w - o.w, s: self.s - o.s }
    }
}

/// Weighted node impurity: `W * gini` or `-S^2 / W` (variance up to a
/// node-independent constant).
fn impurity(c: Criterion, st: Stats) -> f64 {
    if st.w <= 0.0 {
        return 0.0;
    }
    match c {
        Criterion::Gini => 2.0 * st.s * (st.w - st.s) / st.w,
        Criterion::Variance => -st.s * st.s / st.w,
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Builder<'a> {
    design: &'a Design,
    params: TreeParams,
    samples: Vec<Sample>,
    stamp: Vec<u32>,
    slot: Vec<u32>,
    generation: u32,
    nodes: Vec<TreeNode>,
    importances: Vec<f64>,
    entries: Vec<(f64, usize, f64, f64)>,
}

/// Grows a tree on `samples`. Returns the tree and the total impurity
/// decrease attributed to each feature.
pub fn build_tree(
    design: &Design,
    samples: Vec<Sample>,
    params: TreeParams,
    mut rng: Option<&mut ChaCha8Rng>,
) -> (Tree, Vec<f64>) {
    let n = design.n_rows();
    let mut b = Builder {
        design,
        params,
        samples,
        stamp: vec![0; n],
        slot: vec![0; n],
        generation: 0,
        nodes: Vec::new(),
        importances: vec![0.0; design.n_cols()],
        entries: Vec::new(),
    };
    let pool: Vec<u32> = (0..design.n_cols() as u32).collect();
    let len = b.samples.len();
    b.grow(0, len, 0, pool, &mut rng);
    (Tree { nodes: b.nodes }, b.importances)
}

impl Builder<'_> {
    fn node_stats(&self, lo: usize, hi: usize) -> (Stats, f64) {
        let mut st = Stats::ZERO;
        let mut sq = 0.0;
        for s in &self.samples[lo..hi] {
            st.add(1, s.weight, s.weight * s.target);
            sq += s.weight * s.target * s.target;
        }
        (st, sq)
    }

    fn is_pure(&self, st: Stats, sq: f64) -> bool {
        match self.params.criterion {
            Criterion::Gini => st.s <= 1e-12 * st.w.max(1.0) || (st.w - st.s) <= 1e-12 * st.w.max(1.0),
            Criterion::Variance => sq - st.s * st.s / st.w <= 1e-12 * sq.max(1e-300),
        }
    }

    fn push_leaf(&mut self, st: Stats) -> u32 {
        let value = if st.w > 0.0 { st.s / st.w } else { 0.0 };
        self.nodes.push(TreeNode::Leaf { value, weight: st.w });
        (self.nodes.len() - 1) as u32
    }

    fn grow(
        &mut self,
        lo: usize,
        hi: usize,
        depth: usize,
        mut pool: Vec<u32>,
        rng: &mut Option<&mut ChaCha8Rng>,
    ) -> u32 {
        let (st, sq) = self.node_stats(lo, hi);
        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        if !depth_ok || st.count < 2 * self.params.min_leaf || self.is_pure(st, sq) {
            return self.push_leaf(st);
        }

        self.generation += 1;
        for (i, s) in self.samples[lo..hi].iter().enumerate() {
            self.stamp[s.row as usize] = self.generation;
            self.slot[s.row as usize] = (lo + i) as u32;
        }

        let parent_imp = impurity(self.params.criterion, st);
        let want = self.params.max_features.unwrap_or(usize::MAX);
        let mut best: Option<Candidate> = None;
        let mut visited = 0usize;
        let mut next = 0usize;
        let mut constant_end = 0usize;
        while next < pool.len() && visited < want {
            if let Some(r) = rng.as_deref_mut() {
                let j = r.gen_range(next..pool.len());
                pool.swap(next, j);
            }
            let f = pool[next] as usize;
            next += 1;
            match self.best_split_on(f, lo, hi, st, parent_imp) {
                None => {
                    // constant in this node, hence in every descendant
                    pool.swap(constant_end, next - 1);
                    constant_end += 1;
                }
                Some(c) => {
                    visited += 1;
                    if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                        best = Some(c);
                    }
                }
            }
        }
        let Some(best) = best.filter(|b| b.gain.is_finite()) else {
            return self.push_leaf(st);
        };

        let mid = self.partition(lo, hi, best.feature, best.threshold);
        self.importances[best.feature] += best.gain.max(0.0);
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Split { feature: best.feature as u32, threshold: best.threshold, left: 0, right: 0 });
        let child_pool: Vec<u32> = pool[constant_end..].to_vec();
        let left = self.grow(lo, mid, depth + 1, child_pool.clone(), rng);
        let right = self.grow(mid, hi, depth + 1, child_pool, rng);
        if let TreeNode::Split { left: l, right: r, .. } = &mut self.nodes[id] {
            *l = left;
            *r = right;
        }
        id as u32
    }

    /// Best threshold on feature `f`, or `None` when `f` is constant here.
    fn best_split_on(&mut self, f: usize, lo: usize, hi: usize, total: Stats, parent_imp: f64) -> Option<Candidate> {
        let node_n = hi - lo;
        self.entries.clear();
        let mut nonzero = Stats::ZERO;
        if self.design.column_nnz(f) <= node_n * 4 {
            let (rows, vals) = self.design.column(f);
            for (&r, &v) in rows.iter().zip(vals) {
                if self.stamp[r as usize] == self.generation {
                    let s = self.samples[self.slot[r as usize] as usize];
                    self.entries.push((v, 1, s.weight, s.weight * s.target));
                    nonzero.add(1, s.weight, s.weight * s.target);
                }
            }
        } else {
            for s in &self.samples[lo..hi] {
                let v = self.design.value(s.row as usize, f);
                if v != 0.0 {
                    self.entries.push((v, 1, s.weight, s.weight * s.target));
                    nonzero.add(1, s.weight, s.weight * s.target);
                }
            }
        }
        let zeros = total.minus(nonzero);
        if zeros.count > 0 {
            self.entries.push((0.0, zeros.count, zeros.w, zeros.s));
        }
        self.entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        if self.entries.first()?.0 == self.entries.last()?.0 {
            return None;
        }

        let min_leaf = self.params.min_leaf;
        let mut left = Stats::ZERO;
        let mut best: Option<Candidate> = None;
        for i in 0..self.entries.len() - 1 {
            let (v, c, w, s) = self.entries[i];
            left.add(c, w, s);
            let nv = self.entries[i + 1].0;
            if nv == v {
                continue;
            }
            let right = total.minus(left);
            if left.count < min_leaf || right.count < min_leaf {
                continue;
            }
            let crit = self.params.criterion;
            let gain = parent_imp - impurity(crit, left) - impurity(crit, right);
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                let mut threshold = v + (nv - v) / 2.0;
                if threshold >= nv {
                    threshold = v;
                }
                best = Some(Candidate { feature: f, threshold, gain });
            }
        }
        // a non-constant feature without an admissible split still counts as visited
        Some(best.unwrap_or(Candidate { feature: f, threshold: f64::NAN, gain: f64::NEG_INFINITY }))
    }

    fn partition(&mut self, lo: usize, hi: usize, f: usize, threshold: f64) -> usize {
        let design = self.design;
        let slice = &mut self.samples[lo..hi];
        let mut mid = 0;
        for i in 0..slice.len() {
            if design.value(slice[i].row as usize, f) <= threshold {
                slice.swap(i, mid);
                mid += 1;
            }
        }
        lo + mid
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;

    fn samples(y: &[f64]) -> Vec<Sample> {
        y.iter().enumerate().map(|(i, &t)| Sample { row: i as u32, weight: 1.0, target: t }).collect()
    }

    fn gini(depth: Option<usize>) -> TreeParams {
        TreeParams { criterion: Criterion::Gini, max_depth: depth, min_leaf: 1, max_features: None }
    }

    #[test]
    fn stump_on_one_feature() {
        let d = Design::from_dense(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]).unwrap();
        let (t, imp) = build_tree(&d, samples(&[0.0, 0.0, 1.0, 1.0]), gini(None), None);
        assert_eq!(t.nodes[0], TreeNode::Split { feature: 0, threshold: 2.5, left: 1, right: 2 });
        assert_eq!(t.split_count(), 1);
        assert!((imp[0] - 2.0).abs() < 1e-12);
        assert_eq!(t.predict_dense(&[0.0]), 0.0);
        assert_eq!(t.predict_dense(&[9.0]), 1.0);
    }

    #[test]
    fn hand_built_depth_two() {
        // x0 <= 1.5 ? (x1 <= 0.5 ? 0.1 : 0.9) : 0.7
        let t = Tree {
            nodes: vec![
                TreeNode::Split { feature: 0, threshold: 1.5, left: 1, right: 4 },
                TreeNode::Split { feature: 1, threshold: 0.5, left: 2, right: 3 },
                TreeNode::Leaf { value: 0.1, weight: 1.0 },
                TreeNode::Leaf { value: 0.9, weight: 1.0 },
                TreeNode::Leaf { value: 0.7, weight: 1.0 },
            ],
        };
        let brute = |x0: f64, x1: f64| {
            if x0 <= 1.5 {
                if x1 <= 0.5 {
                    0.1
                } else {
                    0.9
                }
            } else {
                0.7
            }
        };
        for x0 in [-1.0, 0.0, 1.5, 1.6, 3.0] {
            for x1 in [0.0, 0.5, 0.6, 2.0] {
                let row = crate::learn::design::dense_to_sparse(&[x0, x1]);
                assert_eq!(t.predict(&row), brute(x0, x1));
                assert_eq!(t.predict_dense(&[x0, x1]), brute(x0, x1));
            }
        }
        let path = t.decision_path_dense(&[1.0, 1.0]);
        assert_eq!(path.len(), 2);
        assert!(path[0].went_left && !path[1].went_left);
    }

    #[test]
    fn depth_limit_and_pure_leaves() {
        let x: Vec<Vec<f64>> = (0..16).map(|i| vec![i as f64, (i % 4) as f64]).collect();
        let y: Vec<f64> = (0..16).map(|i| f64::from((i / 2) % 2 == 1)).collect();
        let d = Design::from_dense(&x).unwrap();
        let (full, _) = build_tree(&d, samples(&y), gini(None), None);
        for (row, target) in x.iter().zip(&y) {
            assert_eq!(full.predict_dense(row), *target);
        }
        let (stump, _) = build_tree(&d, samples(&y), gini(Some(1)), None);
        assert_eq!(stump.split_count(), 1);
    }

    #[test]
    fn sparse_and_negative_values() {
        // zeros sit between negative and positive values
        let x = vec![vec![-2.0], vec![0.0], vec![0.0], vec![3.0], vec![-1.0]];
        let y = [1.0, 0.0, 0.0, 1.0, 1.0];
        let d = Design::from_dense(&x).unwrap();
        let (t, _) = build_tree(&d, samples(&y), gini(None), None);
        for (row, target) in x.iter().zip(&y) {
            assert_eq!(t.predict_dense(row), *target);
        }
    }

    #[test]
    fn constant_features_make_a_leaf() {
        let d = Design::from_dense(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let (t, imp) = build_tree(&d, samples(&[0.0, 1.0, 1.0]), gini(None), None);
        assert_eq!(t.nodes.len(), 1);
        assert!((t.leaf_value(0) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(imp, vec![0.0, 0.0]);
    }

    #[test]
    fn variance_split_and_weights() {
        let d = Design::from_dense(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let params = TreeParams { criterion: Criterion::Variance, max_depth: Some(1), min_leaf: 1, max_features: None };
        let s = vec![
            Sample { row: 0, weight: 1.0, target: 0.0 },
            Sample { row: 1, weight: 3.0, target: 10.0 },
            Sample { row: 2, weight: 1.0, target: 10.0 },
        ];
        let (t, _) = build_tree(&d, s, params, None);
        assert_eq!(t.predict_dense(&[0.0]), 0.0);
        assert_eq!(t.predict_dense(&[2.0]), 10.0);
    }

    #[test]
    fn random_feature_order_is_seeded() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| (0..6).map(|j| ((i * (j + 3)) % 7) as f64).collect()).collect();
        let y: Vec<f64> = (0..40).map(|i| f64::from(i % 3 == 0)).collect();
        let d = Design::from_dense(&x).unwrap();
        let params = TreeParams { max_features: Some(2), ..gini(None) };
        let mut r1 = ChaCha8Rng::seed_from_u64(3);
        let mut r2 = ChaCha8Rng::seed_from_u64(3);
        let (a, _) = build_tree(&d, samples(&y), params, Some(&mut r1));
        let (b, _) = build_tree(&d, samples(&y), params, Some(&mut r2));
        assert_eq!(a, b);
    }
}
