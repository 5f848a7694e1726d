use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FeaturizeError, GsFeatureRow};
use crate::corpus::Dataset;
use crate::syntax::{build_token_tree, extract_fragments, fragment_sequence, token_sequence, FragmentMode, TokenTree};

pub const DEFAULT_N_RANGE: RangeInclusive<usize> = 1..=5;

/// Occurrence counts keyed by feature string.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Multiset {
    pub counts: BTreeMap<String, u32>,
}

pub type PatternMultiset = Multiset;
pub type GramMultiset = Multiset;

impl Multiset {
    pub fn add(&mut self, key: impl Into<String>, n: u32) {
        if n > 0 {
            *self.counts.entry(key.into()).or_default() += n;
        }
    }

    pub fn merge(&mut self, other: &Multiset) {
        for (k, &v) in &other.counts {
            self.add(k.clone(), v);
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().map(|&v| u64::from(v)).sum()
    }

    pub fn get(&self, key: &str) -> u32 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }
}

impl<S: Into<String>> FromIterator<S> for Multiset {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut m = Multiset::default();
        for s in iter {
            m.add(s, 1);
        }
        m
    }
}

/// One dash-joined kind path per leaf, rooted at the leaf's statement.
pub fn extract_tp(tree: &TokenTree) -> PatternMultiset {
    tree.statement_paths()
        .into_iter()
        .map(|path| path.iter().map(|k| k.as_str()).collect::<Vec<_>>().join("-"))
        .collect()
}

/// Contiguous 1- to 5-grams joined with `_`.
pub fn extract_ts<S: AsRef<str>>(sequence: &[S]) -> GramMultiset {
    extract_ngrams(sequence, DEFAULT_N_RANGE)
}

pub fn extract_ngrams<S: AsRef<str>>(sequence: &[S], n_range: RangeInclusive<usize>) -> GramMultiset {
    let mut out = Multiset::default();
    let lo = (*n_range.start()).max(1);
    for n in lo..=*n_range.end() {
        if n > sequence.len() {
            break;
        }
        for window in sequence.windows(n) {
            let gram = window.iter().map(AsRef::as_ref).collect::<Vec<_>>().join("_");
            out.add(gram, 1);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractOptions {
    pub fragment_mode: FragmentMode,
    pub n_min: usize,
    pub n_max: usize,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self { fragment_mode: FragmentMode::AddedOnly, n_min: *DEFAULT_N_RANGE.start(), n_max: *DEFAULT_N_RANGE.end() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CommitFeatures {
    pub commit_id: String,
    pub tp: PatternMultiset,
    pub ts: GramMultiset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gs: Option<GsFeatureRow>,
    /// Leaves across all trees of the commit.
    pub leaf_count: u64,
}

/// TP and TS features of one patch. Grams never cross fragment boundaries.
/// Fragments without tree support contribute TS only.
pub fn featurize_patch(
    commit_id: &str,
    patch_text: &str,
    options: &ExtractOptions,
) -> Result<CommitFeatures, FeaturizeError> {
    let mut out = CommitFeatures { commit_id: commit_id.to_string(), ..Default::default() };
    let n_range = options.n_min..=options.n_max;
    for fragment in extract_fragments(commit_id, patch_text, options.fragment_mode)? {
        if fragment.language.has_tree_support() {
            let tree = build_token_tree(&fragment)?;
            out.leaf_count += tree.leaf_count() as u64;
            out.tp.merge(&extract_tp(&tree));
            out.ts.merge(&extract_ngrams(&token_sequence(&tree), n_range.clone()));
        } else {
            out.ts.merge(&extract_ngrams(&fragment_sequence(&fragment), n_range.clone()));
        }
    }
    Ok(out)
}

/// Featurizes every record in parallel; output follows dataset order and
/// carries each record's GS row.
pub fn featurize_dataset(dataset: &Dataset, options: &ExtractOptions) -> Result<Vec<CommitFeatures>, FeaturizeError> {
    dataset
        .records
        .par_iter()
        .map(|r| {
            let mut f = featurize_patch(&r.commit_id, &r.patch_text, options)?;
            f.gs = r.gs_row.clone();
            Ok(f)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::syntax::{parse_source, Kind, SyntaxNode};

    #[test]
    fn tp_of_if_else_program() {
        let tree = parse_source("if (x <= y) { y = 0; } else { y = 1; }");
        let tp = extract_tp(&tree);
        assert_eq!(tp.get("if_stmt-if-condition-expr-name"), 2);
        assert_eq!(tp.get("if_stmt-if-condition-expr-operator"), 1);
        assert_eq!(tp.total(), tree.leaf_count() as u64);
    }

    #[test]
    fn tp_of_empty_tree() {
        assert!(extract_tp(&TokenTree::new()).is_empty());
    }

    #[test]
    fn ngram_examples() {
        let m = extract_ngrams(&["a", "b", "c"], 1..=2);
        let expect: Multiset = ["a", "b", "c", "a_b", "b_c"].into_iter().collect();
        assert_eq!(m, expect);
        assert_eq!(extract_ts(&["a", "b", "c"]).total(), 6);
        assert!(extract_ts::<&str>(&[]).is_empty());
        assert_eq!(extract_ts(&["x", "x"]).get("x"), 2);
    }

    fn kinds() -> Vec<Kind> {
        Kind::ALL.iter().copied().filter(|k| *k != Kind::Unit).collect()
    }

    fn arb_tree() -> impl Strategy<Value = SyntaxNode> {
        let leaf = prop::sample::select(kinds()).prop_map(SyntaxNode::leaf);
        leaf.prop_recursive(4, 40, 4, |inner| {
            (prop::sample::select(kinds()), prop::collection::vec(inner, 1..4))
                .prop_map(|(k, c)| SyntaxNode::with(k, c))
        })
    }

    proptest! {
        #[test]
        fn tp_total_is_leaf_count(stmts in prop::collection::vec(arb_tree(), 0..5)) {
            let tree = TokenTree::from_statements(stmts);
            prop_assert_eq!(extract_tp(&tree).total(), tree.leaf_count() as u64);
        }

        #[test]
        fn ngram_total_closed_form(len in 0usize..30, hi in 1usize..7) {
            let seq: Vec<String> = (0..len).map(|i| format!("k{}", i % 3)).collect();
            let total = extract_ngrams(&seq, 1..=hi).total();
            let expect: usize = (1..=hi.min(len)).map(|n| len - n + 1).sum();
            prop_assert_eq!(total, expect as u64);
        }
    }

    #[test]
    fn patch_features() {
        let patch =
            "diff --git a/A.java b/A.java\n--- a/A.java\n+++ b/A.java\n@@ -1,1 +1,2 @@\n class A {\n+int x = 1;\n";
        let f = featurize_patch("abc1", patch, &ExtractOptions::default()).unwrap();
        assert_eq!(f.tp.total(), f.leaf_count);
        assert!(f.tp.get("decl_stmt-decl-name") == 1);
        assert!(f.ts.get("decl_stmt") == 0);
        assert!(f.ts.get("name") >= 1);
        let py = "diff --git a/a.py b/a.py\n--- a/a.py\n+++ b/a.py\n@@ -0,0 +1,1 @@\n+x = 1\n";
        let f = featurize_patch("abc2", py, &ExtractOptions::default()).unwrap();
        assert!(f.tp.is_empty());
        assert_eq!(f.ts.get("name_operator_literal"), 1);
    }
}
