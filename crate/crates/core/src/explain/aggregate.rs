use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{bound, format_range, Explanation};
use crate::featurize::Namespace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedCondition {
    pub namespace: Namespace,
    pub name: String,
    pub rank: usize,
    pub frequency: usize,
    #[serde(serialize_with = "bound::serialize", deserialize_with = "bound::lower")]
    pub lower: f64,
    #[serde(serialize_with = "bound::serialize", deserialize_with = "bound::upper")]
    pub upper: f64,
}

impl AggregatedCondition {
    pub fn condition(&self) -> String {
        format_range(self.lower, &self.name, self.upper)
    }
}

/// Feature plus which of its bounds are finite.
type BucketKey = (Namespace, String, bool, bool);

fn median(mut v: Vec<f64>, open: f64) -> f64 {
    v.retain(|x| x.is_finite());
    if v.is_empty() {
        return open;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Counts conditions per feature and bound shape
/// across explanations and keeps the `top_k` most frequent per namespace.
/// Ties break by feature name, then shape. Bounds are the medians of the
/// bounds in the bucket, so a merged interval is never empty.
pub fn aggregate_conditions(explanations: &[Explanation], top_k: usize) -> Vec<AggregatedCondition> {
    let mut buckets: BTreeMap<BucketKey, (usize, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for e in explanations {
        for r in &e.rules {
            let key = (r.namespace, r.name.clone(), r.lower.is_finite(), r.upper.is_finite());
            let b = buckets.entry(key).or_default();
            b.0 += 1;
            b.1.push(r.lower);
            b.2.push(r.upper);
        }
    }
    let mut out = Vec::new();
    for ns in Namespace::ALL {
        let mut group: Vec<_> = buckets.iter().filter(|(k, _)| k.0 == ns).collect();
        group.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.0.cmp(b.0)));
        for (i, ((_, name, _, _), (freq, lowers, uppers))) in group.into_iter().take(top_k).enumerate() {
            out.push(AggregatedCondition {
                namespace: ns,
                name: name.clone(),
                rank: i + 1,
                frequency: *freq,
                lower: median(lowers.clone(), f64::NEG_INFINITY),
                upper: median(uppers.clone(), f64::INFINITY),
            });
        }
    }
    out
}

/// One table per namespace with rank, condition and frequency.
pub fn conditions_markdown(project: &str, conditions: &[AggregatedCondition], explained: usize) -> String {
    let mut s = format!("# Most frequent conditions: {project}\n\nExplained commits: {explained}\n");
    for ns in Namespace::ALL {
        let rows: Vec<_> = conditions.iter().filter(|c| c.namespace == ns).collect();
        if rows.is_empty() {
            continue;
        }
        let _ = write!(s, "\n## {}\n\n| Rank | Condition | Frequency |\n|---:|---|---:|\n", ns.as_str().to_uppercase());
        for c in rows {
            let _ = writeln!(s, "| {} | `{}` | {} |", c.rank, c.condition(), c.frequency);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::{Direction, RuleCondition};

    fn rule(ns: Namespace, name: &str, lower: f64, upper: f64) -> RuleCondition {
        RuleCondition { namespace: ns, name: name.into(), lower, upper, direction: Direction::SupportsBuggy }
    }

    fn expl(rules: Vec<RuleCondition>) -> Explanation {
        Explanation {
            commit_id: "ab".into(),
            prediction: 1,
            probability: 0.9,
            rules,
            fidelity: 1.0,
            low_fidelity: false,
        }
    }

    #[test]
    fn frequency_order_and_median_bounds() {
        let es = vec![
            expl(vec![rule(Namespace::Tp, "b", 1.0, 5.0), rule(Namespace::Tp, "a", f64::NEG_INFINITY, 2.0)]),
            expl(vec![rule(Namespace::Tp, "b", 3.0, f64::INFINITY), rule(Namespace::Gs, "la", 0.5, 9.0)]),
            expl(vec![rule(Namespace::Tp, "b", 2.0, 7.0), rule(Namespace::Tp, "a", 0.0, 4.0)]),
        ];
        let agg = aggregate_conditions(&es, 5);
        let tp: Vec<_> = agg.iter().filter(|c| c.namespace == Namespace::Tp).collect();
        assert_eq!(tp[0].name, "b");
        assert_eq!(tp[0].frequency, 2);
        assert_eq!(tp[0].lower, 1.5);
        assert_eq!(tp[0].upper, 6.0);
        let names: Vec<(&str, usize)> = tp.iter().map(|c| (c.name.as_str(), c.frequency)).collect();
        assert_eq!(names, [("b", 2), ("a", 1), ("a", 1), ("b", 1)]);
        assert!(agg.iter().all(|c| c.lower < c.upper));
        let md = conditions_markdown("demo", &agg, 3);
        assert!(md.contains("## GS") && md.contains("## TP"));
        assert!(md.contains("`1.50 < b <= 6.00`"));
        assert!(md.contains("`b > 3.00`"));
    }

    #[test]
    fn counts_match_brute_force() {
        let names = ["p", "q", "r", "s", "t", "u", "v"];
        let mut es = Vec::new();
        for i in 0..25usize {
            let rules = names
                .iter()
                .enumerate()
                .filter(|(j, _)| (i * 7 + j * 3) % (j + 2) == 0)
                .map(|(_, n)| rule(Namespace::Gs, n, 0.0, 1.0))
                .collect();
            es.push(expl(rules));
        }
        let agg = aggregate_conditions(&es, 5);
        let mut brute: Vec<(usize, &str)> = names
            .iter()
            .map(|n| (es.iter().filter(|e| e.rules.iter().any(|r| r.name == *n)).count(), *n))
            .filter(|(c, _)| *c > 0)
            .collect();
        brute.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
        brute.truncate(5);
        let got: Vec<(usize, &str)> = agg.iter().map(|c| (c.frequency, c.name.as_str())).collect();
        assert_eq!(got, brute);
    }
}
