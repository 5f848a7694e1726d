use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SelectError;
use crate::evaluate::{correlation, CorrelationKind, StatTestResult};
use crate::featurize::Namespace;

/// Selected-set composition for one project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestSetSize {
    pub project: String,
    pub instances: usize,
    pub per_namespace: BTreeMap<Namespace, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeCorrelation {
    pub namespace: Namespace,
    pub kind: CorrelationKind,
    pub result: Option<StatTestResult>,
    /// Why the correlation is undefined, when it is.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub undefined: Option<String>,
}

/// Correlates the number of selected features of each namespace with the
/// project's instance count.
pub fn best_set_size_analysis(sizes: &[BestSetSize]) -> Result<Vec<SizeCorrelation>, SelectError> {
    if sizes.len() < 3 {
        return Err(SelectError::TooFewProjects(sizes.len()));
    }
    let xs: Vec<f64> = sizes.iter().map(|s| s.instances as f64).collect();
    let mut out = Vec::new();
    for ns in Namespace::ALL {
        if sizes.iter().all(|s| !s.per_namespace.contains_key(&ns)) {
            continue;
        }
        let ys: Vec<f64> = sizes.iter().map(|s| *s.per_namespace.get(&ns).unwrap_or(&0) as f64).collect();
        for kind in [CorrelationKind::Pearson, CorrelationKind::Spearman] {
            let (result, undefined) = match correlation(&xs, &ys, kind) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            out.push(SizeCorrelation { namespace: ns, kind, result, undefined });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn size(p: &str, n: usize, ts: usize, gs: usize) -> BestSetSize {
        BestSetSize {
            project: p.into(),
            instances: n,
            per_namespace: [(Namespace::Ts, ts), (Namespace::Gs, gs)].into_iter().collect(),
        }
    }

    #[test]
    fn monotone_sizes_correlate_and_constants_are_undefined() {
        let s = vec![size("a", 100, 3, 2), size("b", 300, 9, 2), size("c", 200, 5, 2), size("d", 400, 20, 2)];
        let out = best_set_size_analysis(&s).unwrap();
        let sp = out.iter().find(|c| c.namespace == Namespace::Ts && c.kind == CorrelationKind::Spearman).unwrap();
        assert!((sp.result.as_ref().unwrap().statistic - 1.0).abs() < 1e-12);
        let gs = out.iter().find(|c| c.namespace == Namespace::Gs).unwrap();
        assert!(gs.result.is_none() && gs.undefined.is_some());
        assert!(out.iter().all(|c| c.namespace != Namespace::Tp));
    }

    #[test]
    fn needs_three_projects() {
        assert!(matches!(best_set_size_analysis(&[size("a", 1, 1, 1)]), Err(SelectError::TooFewProjects(1))));
    }
}
