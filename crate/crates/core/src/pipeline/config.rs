use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::corpus::{LabelKind, LabelSchema};
use crate::explain::ExplainOptions;
use crate::featurize::{ExtractOptions, FeatureCombo, GsSchema, DEFAULT_N_RANGE};
use crate::learn::{ClassifierSpec, ModelKind};
use crate::select::{CoarseSchedule, Criterion};
use crate::syntax::FragmentMode;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VocabScope {
    /// Vocabulary from the training partition only.
    #[default]
    Train,
    /// Vocabulary from every commit of the project.
    Full,
}

impl std::str::FromStr for VocabScope {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "train" => Ok(VocabScope::Train),
            "full" => Ok(VocabScope::Full),
            other => Err(format!("unknown vocabulary scope `{other}` (expected train or full)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    pub name: String,
    pub labels: PathBuf,
    pub label_kind: LabelKind,
    pub commit_id_column: String,
    pub label_column: String,
    pub timestamp_column: Option<String>,
    pub gs: Option<PathBuf>,
    pub gs_commit_id_column: String,
    /// Directory holding `<commit_id>.diff` files.
    pub patches: Option<PathBuf>,
    /// Git working copies searched for each commit.
    pub repos: Vec<PathBuf>,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        Self {
            name: String::new(),
            labels: PathBuf::new(),
            label_kind: LabelKind::Binary,
            commit_id_column: "commit_id".into(),
            label_column: "label".into(),
            timestamp_column: None,
            gs: None,
            gs_commit_id_column: "commit_id".into(),
            patches: None,
            repos: Vec::new(),
        }
    }
}

impl ProjectConfig {
    pub fn label_schema(&self) -> LabelSchema {
        LabelSchema {
            commit_id: self.commit_id_column.clone(),
            label: self.label_column.clone(),
            label_kind: self.label_kind,
            timestamp: self.timestamp_column.clone(),
            project: Some(self.name.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub criterion: Criterion,
    /// Score greedy candidates on the test partition instead of a held-out
    /// tail of the training partition.
    pub paper_faithful: bool,
    pub coarse: bool,
    pub coarse_fraction: f64,
    pub refine_from: usize,
    pub step: usize,
    /// Share of the training partition, taken from its end, used to score
    /// greedy candidates.
    pub eval_fraction: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        let c = CoarseSchedule::default();
        Self {
            criterion: Criterion::F1,
            paper_faithful: false,
            coarse: false,
            coarse_fraction: c.fraction,
            refine_from: c.refine_from,
            step: 1,
            eval_fraction: 0.3,
        }
    }
}

impl SelectionConfig {
    pub fn schedule(&self) -> Option<CoarseSchedule> {
        self.coarse.then_some(CoarseSchedule { fraction: self.coarse_fraction, refine_from: self.refine_from })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    pub enabled: bool,
    pub combo: String,
    pub model: String,
    pub n_synthetic: usize,
    pub neighbors: usize,
    pub max_depth: usize,
    pub fidelity_floor: f64,
    pub top_k: usize,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        let o = ExplainOptions::default();
        Self {
            enabled: true,
            combo: "GS+TP".into(),
            model: "rf".into(),
            n_synthetic: o.n_synthetic,
            neighbors: o.neighbors,
            max_depth: o.max_depth,
            fidelity_floor: o.fidelity_floor,
            top_k: 5,
        }
    }
}

impl ExplainConfig {
    pub fn options(&self) -> ExplainOptions {
        ExplainOptions {
            n_synthetic: self.n_synthetic,
            neighbors: self.neighbors,
            max_depth: self.max_depth,
            fidelity_floor: self.fidelity_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub combos: Vec<String>,
    pub models: Vec<String>,
    pub baseline: String,
    pub train_fraction: f64,
    pub vocab: VocabScope,
    pub mode: FragmentMode,
    pub n_min: usize,
    pub n_max: usize,
    pub gs_metrics: Option<Vec<String>>,
    pub selection: SelectionConfig,
    pub explain: ExplainConfig,
    /// Per-model hyperparameter overrides, e.g. `[hyperparams.rf] n_trees = 200`.
    pub hyperparams: BTreeMap<String, BTreeMap<String, toml::Value>>,
    pub projects: Vec<ProjectConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            out: PathBuf::from("bicpat-out"),
            combos: std::iter::once(FeatureCombo::GS_ALL).chain(FeatureCombo::SEVEN).map(|c| c.name()).collect(),
            models: ModelKind::ALL.iter().map(|m| m.as_str().to_string()).collect(),
            baseline: "GS".into(),
            train_fraction: 0.7,
            vocab: VocabScope::Train,
            mode: FragmentMode::AddedOnly,
            n_min: *DEFAULT_N_RANGE.start(),
            n_max: *DEFAULT_N_RANGE.end(),
            gs_metrics: None,
            selection: SelectionConfig::default(),
            explain: ExplainConfig::default(),
            hyperparams: BTreeMap::new(),
            projects: Vec::new(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> PipelineError {
    PipelineError::Config(msg.into())
}

impl RunConfig {
    /// Parses TOML and resolves relative paths against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out);
        for p in &mut self.projects {
            fix(&mut p.labels);
            p.gs.as_mut().map(fix);
            p.patches.as_mut().map(fix);
            p.repos.iter_mut().for_each(fix);
        }
    }

    pub fn combo_list(&self) -> Result<Vec<FeatureCombo>, PipelineError> {
        let mut out: Vec<FeatureCombo> = Vec::new();
        for c in &self.combos {
            let combo: FeatureCombo =
                c.parse().map_err(|e: crate::featurize::FeaturizeError| invalid(e.to_string()))?;
            if out.contains(&combo) {
                return Err(invalid(format!("combo {c} listed twice")));
            }
            out.push(combo);
        }
        Ok(out)
    }

    pub fn model_list(&self) -> Result<Vec<ModelKind>, PipelineError> {
        let mut out: Vec<ModelKind> = Vec::new();
        for m in &self.models {
            let kind: ModelKind = m.parse().map_err(|e: crate::learn::LearnError| invalid(e.to_string()))?;
            if !out.contains(&kind) {
                out.push(kind);
            }
        }
        Ok(out)
    }

    pub fn extract_options(&self) -> ExtractOptions {
        ExtractOptions { fragment_mode: self.mode, n_min: self.n_min, n_max: self.n_max }
    }

    pub fn gs_schema(&self, project: &ProjectConfig) -> GsSchema {
        GsSchema { commit_id: project.gs_commit_id_column.clone(), metrics: self.gs_metrics.clone() }
    }

    /// Classifier with overrides applied and the given seed.
    pub fn classifier(&self, kind: ModelKind, seed: u64) -> Result<ClassifierSpec, PipelineError> {
        let mut spec = ClassifierSpec::new(kind, seed);
        if let Some(over) = self.hyperparams.get(kind.as_str()) {
            for (key, value) in over {
                let text = match value {
                    toml::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                spec.set(key, &text).map_err(|e| invalid(e.to_string()))?;
            }
        }
        spec.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(spec)
    }

    /// Checks everything that can be checked before any work starts.
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.projects.is_empty() {
            return Err(invalid("no projects configured"));
        }
        let combos = self.combo_list()?;
        if combos.is_empty() {
            return Err(invalid("no combos configured"));
        }
        let models = self.model_list()?;
        if models.is_empty() {
            return Err(invalid("no models configured"));
        }
        for key in self.hyperparams.keys() {
            let kind: ModelKind = key.parse().map_err(|e: crate::learn::LearnError| invalid(e.to_string()))?;
            self.classifier(kind, 0)?;
        }
        self.classifier(ModelKind::Rf, 0)?;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(invalid(format!("train_fraction {} outside (0, 1)", self.train_fraction)));
        }
        let s = &self.selection;
        if !(s.eval_fraction > 0.0 && s.eval_fraction < 1.0) {
            return Err(invalid(format!("selection.eval_fraction {} outside (0, 1)", s.eval_fraction)));
        }
        if !(s.coarse_fraction > 0.0 && s.coarse_fraction < 1.0) {
            return Err(invalid(format!("selection.coarse_fraction {} outside (0, 1)", s.coarse_fraction)));
        }
        if s.step == 0 {
            return Err(invalid("selection.step must be at least 1"));
        }
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(invalid(format!("n-gram range {}..={} is empty", self.n_min, self.n_max)));
        }
        let e = &self.explain;
        if e.enabled {
            e.combo.parse::<FeatureCombo>().map_err(|err| invalid(err.to_string()))?;
            e.model.parse::<ModelKind>().map_err(|err| invalid(err.to_string()))?;
            if e.n_synthetic == 0 || e.max_depth == 0 {
                return Err(invalid("explain.n_synthetic and explain.max_depth must be positive"));
            }
        }
        let needs_gs = combos.iter().any(|c| c.gs);
        let mut names = std::collections::BTreeSet::new();
        for p in &self.projects {
            if p.name.is_empty() || p.name.contains(['/', '\\']) || p.name.starts_with('.') {
                return Err(invalid(format!("invalid project name `{}`", p.name)));
            }
            if !names.insert(&p.name) {
                return Err(invalid(format!("project {} listed twice", p.name)));
            }
            if !p.labels.is_file() {
                return Err(invalid(format!("{}: labels file not found", p.labels.display())));
            }
            match &p.gs {
                Some(gs) if !gs.is_file() => return Err(invalid(format!("{}: GS file not found", gs.display()))),
                None if needs_gs => {
                    return Err(invalid(format!("project {} has no GS file but a GS combo is requested", p.name)))
                }
                _ => {}
            }
            match (&p.patches, p.repos.is_empty()) {
                (Some(dir), _) if !dir.is_dir() => {
                    return Err(invalid(format!("{}: patch directory not found", dir.display())))
                }
                (None, true) => return Err(invalid(format!("project {} needs `patches` or `repos`", p.name))),
                _ => {}
            }
            if let Some(r) = p.repos.iter().find(|r| !r.is_dir()) {
                return Err(invalid(format!("{}: repository not found", r.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_cover_all_combos_and_models() {
        let c = RunConfig::default();
        assert_eq!(c.seed, 42);
        assert_eq!(c.combo_list().unwrap().len(), 8);
        assert_eq!(c.model_list().unwrap().len(), 4);
    }

    #[test]
    fn unknown_combo_fails_validation() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("l.csv"), "commit_id,label\n").unwrap();
        let text = r#"
combos = ["GS", "TP+XX"]
[[projects]]
name = "p"
labels = "l.csv"
patches = "."
"#;
        let cfg = RunConfig::from_toml(text, dir.path()).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(matches!(err, PipelineError::Config(_)), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn hyperparameter_overrides_apply() {
        let text = "[hyperparams.rf]\nn_trees = 7\nmax_features = \"log2\"\n";
        let cfg = RunConfig::from_toml(text, Path::new("/")).unwrap();
        let spec = cfg.classifier(ModelKind::Rf, 1).unwrap();
        let bad = RunConfig::from_toml("[hyperparams.rf]\nn_trees = 0\n", Path::new("/")).unwrap();
        assert!(bad.classifier(ModelKind::Rf, 1).is_err());
        assert_ne!(spec, ClassifierSpec::new(ModelKind::Rf, 1));
        assert!(RunConfig::from_toml("bogus = 1", Path::new("/")).is_err());
    }
}
