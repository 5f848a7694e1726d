use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CommitFeatures, FeaturizeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Namespace {
    Gs,
    Ts,
    Tp,
}

impl Namespace {
    pub const ALL: [Namespace; 3] = [Namespace::Gs, Namespace::Ts, Namespace::Tp];

    pub fn as_str(self) -> &'static str {
        match self {
            Namespace::Gs => "gs",
            Namespace::Ts => "ts",
            Namespace::Tp => "tp",
        }
    }

    /// Whether values are occurrence counts.
    pub fn is_count(self) -> bool {
        self != Namespace::Gs
    }
}

impl fmt::Display for Namespace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Namespace {
    type Err = FeaturizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gs" => Ok(Namespace::Gs),
            "ts" => Ok(Namespace::Ts),
            "tp" => Ok(Namespace::Tp),
            _ => Err(FeaturizeError::UnknownNamespace(s.to_string())),
        }
    }
}

/// A nonempty set of namespaces. `GS-ALL` is the churn-only baseline that
/// skips ranking and selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FeatureCombo {
    pub gs: bool,
    pub ts: bool,
    pub tp: bool,
    pub unprioritized: bool,
}

impl FeatureCombo {
    const fn of(gs: bool, ts: bool, tp: bool) -> Self {
        Self { gs, ts, tp, unprioritized: false }
    }

    pub const GS: Self = Self::of(true, false, false);
    pub const TS: Self = Self::of(false, true, false);
    pub const TP: Self = Self::of(false, false, true);
    pub const GS_TS: Self = Self::of(true, true, false);
    pub const GS_TP: Self = Self::of(true, false, true);
    pub const TS_TP: Self = Self::of(false, true, true);
    pub const GS_TS_TP: Self = Self::of(true, true, true);
    pub const GS_ALL: Self = Self { gs: true, ts: false, tp: false, unprioritized: true };

    pub const SEVEN: [Self; 7] = [Self::GS, Self::TS, Self::TP, Self::GS_TS, Self::GS_TP, Self::TS_TP, Self::GS_TS_TP];

    pub fn includes(&self, ns: Namespace) -> bool {
        match ns {
            Namespace::Gs => self.gs,
            Namespace::Ts => self.ts,
            Namespace::Tp => self.tp,
        }
    }

    pub fn namespaces(&self) -> Vec<Namespace> {
        Namespace::ALL.into_iter().filter(|ns| self.includes(*ns)).collect()
    }

    pub fn name(&self) -> String {
        if self.unprioritized {
            return "GS-ALL".into();
        }
        self.namespaces().iter().map(|ns| ns.as_str().to_ascii_uppercase()).collect::<Vec<_>>().join("+")
    }
}

impl fmt::Display for FeatureCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for FeatureCombo {
    type Err = FeaturizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FeaturizeError::UnknownCombo(s.to_string());
        let trimmed = s.trim();
        if trimmed.eq_ignore_ascii_case("GS-ALL") {
            return Ok(Self::GS_ALL);
        }
        let mut combo = Self::of(false, false, false);
        for part in trimmed.split('+') {
            let ns: Namespace = part.trim().parse().map_err(|_| bad())?;
            let slot = match ns {
                Namespace::Gs => &mut combo.gs,
                Namespace::Ts => &mut combo.ts,
                Namespace::Tp => &mut combo.tp,
            };
            if *slot {
                return Err(bad());
            }
            *slot = true;
        }
        Ok(combo)
    }
}

impl TryFrom<String> for FeatureCombo {
    type Error = FeaturizeError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<FeatureCombo> for String {
    fn from(c: FeatureCombo) -> String {
        c.name()
    }
}

/// Column layout: namespace order, then lexicographic name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<(Namespace, String)>", into = "Vec<(Namespace, String)>")]
pub struct FeatureVocabulary {
    entries: Vec<(Namespace, String)>,
    index: HashMap<(Namespace, String), usize>,
}

impl From<Vec<(Namespace, String)>> for FeatureVocabulary {
    fn from(entries: Vec<(Namespace, String)>) -> Self {
        Self::from_entries(entries)
    }
}

impl From<FeatureVocabulary> for Vec<(Namespace, String)> {
    fn from(v: FeatureVocabulary) -> Self {
        v.entries
    }
}

impl FeatureVocabulary {
    /// Sorts and deduplicates.
    pub fn from_entries(entries: impl IntoIterator<Item = (Namespace, String)>) -> Self {
        let sorted: BTreeSet<(Namespace, String)> = entries.into_iter().collect();
        let entries: Vec<_> = sorted.into_iter().collect();
        let index = entries.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        Self { entries, index }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(Namespace, String)] {
        &self.entries
    }

    pub fn entry(&self, col: usize) -> (Namespace, &str) {
        let (ns, name) = &self.entries[col];
        (*ns, name)
    }

    pub fn namespace(&self, col: usize) -> Namespace {
        self.entries[col].0
    }

    pub fn index_of(&self, ns: Namespace, name: &str) -> Option<usize> {
        self.index.get(&(ns, name.to_string())).copied()
    }

    /// `ns:name` label of a column.
    pub fn label(&self, col: usize) -> String {
        let (ns, name) = &self.entries[col];
        format!("{ns}:{name}")
    }

    pub fn count_in(&self, ns: Namespace) -> usize {
        self.entries.iter().filter(|(n, _)| *n == ns).count()
    }

    /// Vocabulary restricted to the given columns, in column order.
    pub fn restrict(&self, cols: &[usize]) -> FeatureVocabulary {
        FeatureVocabulary::from_entries(cols.iter().map(|&c| self.entries[c].clone()))
    }
}

/// Union of the names observed in the combo's namespaces.
pub fn build_vocabulary<'a>(
    corpus: impl IntoIterator<Item = &'a CommitFeatures>,
    combo: FeatureCombo,
) -> Result<FeatureVocabulary, FeaturizeError> {
    let mut names = BTreeSet::new();
    for f in corpus {
        if combo.gs {
            if let Some(gs) = &f.gs {
                names.extend(gs.keys().map(|k| (Namespace::Gs, k.clone())));
            }
        }
        if combo.ts {
            names.extend(f.ts.counts.keys().map(|k| (Namespace::Ts, k.clone())));
        }
        if combo.tp {
            names.extend(f.tp.counts.keys().map(|k| (Namespace::Tp, k.clone())));
        }
    }
    if names.is_empty() {
        return Err(FeaturizeError::EmptyVocabulary(combo.name()));
    }
    Ok(FeatureVocabulary::from_entries(names))
}
