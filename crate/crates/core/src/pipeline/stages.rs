use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{io_error, write_manifest, PipelineError, ProjectConfig, RunConfig, VocabScope};
use crate::corpus::{
    committer_timestamp, fetch_patches, load_labels, locate_commit, read_dataset_jsonl, split_time_ordered,
    write_dataset_jsonl, CommitRecord, CorpusError, Dataset, LabelKind, SourceKind,
};
use crate::evaluate::{compare_combos, metrics, read_results_csv, write_reports, write_results_csv, EvalRow};
use crate::explain::{aggregate_conditions, conditions_markdown, explain_predicted_buggy, write_explain_json};
use crate::featurize::{
    assemble_matrix, attach_gs, build_vocabulary, featurize_dataset, load_gs, read_sidecar, write_sidecar,
    CommitFeatures, EncodeDiagnostics, FeatureCombo, FeatureMatrix, GsFeatureRow,
};
use crate::learn::{fit_matrix, threshold, Design, ModelKind, TrainedModel};
use crate::seed;
use crate::select::{greedy_forward_select, read_rank_csv, rfe_rank, write_rank_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Ingest,
    Extract,
    Encode,
    Rank,
    Select,
    Train,
    Evaluate,
    Compare,
    Explain,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Ingest,
        Stage::Extract,
        Stage::Encode,
        Stage::Rank,
        Stage::Select,
        Stage::Train,
        Stage::Evaluate,
        Stage::Compare,
        Stage::Explain,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Extract => "extract",
            Stage::Encode => "encode",
            Stage::Rank => "rank",
            Stage::Select => "select",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Compare => "compare",
            Stage::Explain => "explain",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Stage::ALL.into_iter().find(|st| st.as_str() == s).ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EncodeSummary {
    combo: String,
    columns: usize,
    train_rows: usize,
    test_rows: usize,
    train: EncodeDiagnostics,
    test: EncodeDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SelectedColumns {
    columns: Vec<usize>,
    names: Vec<String>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_error(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| io_error(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, stage: &'static str) -> Result<T, PipelineError> {
    if !path.is_file() {
        return Err(PipelineError::MissingArtifact { path: path.to_path_buf(), stage });
    }
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_error(path, e))
}

fn require(path: &Path, stage: &'static str) -> Result<(), PipelineError> {
    if path.exists() {
        Ok(())
    } else {
        Err(PipelineError::MissingArtifact { path: path.to_path_buf(), stage })
    }
}

fn mkdir(path: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(path).map_err(|e| io_error(path, e))
}

/// Keeps the first error in input order so failures are reproducible.
fn first_error<T>(results: Vec<Result<T, PipelineError>>) -> Result<Vec<T>, PipelineError> {
    results.into_iter().collect()
}

pub struct Pipeline {
    config: RunConfig,
    combos: Vec<FeatureCombo>,
    models: Vec<ModelKind>,
}

impl Pipeline {
    pub fn new(config: RunConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let combos = config.combo_list()?;
        let models = config.model_list()?;
        Ok(Self { config, combos, models })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn project_dir(&self, project: &ProjectConfig) -> PathBuf {
        self.config.out.join("projects").join(&project.name)
    }

    pub fn combo_dir(&self, project: &ProjectConfig, combo: FeatureCombo) -> PathBuf {
        self.project_dir(project).join("combos").join(combo.name())
    }

    fn seed(&self, parts: &[&str]) -> u64 {
        seed::derive(self.config.seed, parts)
    }

    /// Runs every stage in order and writes the manifest.
    pub fn run(&self) -> Result<(), PipelineError> {
        write_manifest(&self.config)?;
        for stage in Stage::ALL {
            self.run_stage(stage)?;
        }
        Ok(())
    }

    pub fn run_stage(&self, stage: Stage) -> Result<(), PipelineError> {
        mkdir(&self.config.out)?;
        match stage {
            Stage::Ingest => self.each_project(|p| self.ingest(p)),
            Stage::Extract => self.each_project(|p| self.extract(p)),
            Stage::Encode => self.each_cell(|p, c| self.encode(p, c)),
            Stage::Rank => self.each_cell(|p, c| self.rank(p, c)),
            Stage::Select => self.each_cell(|p, c| self.select(p, c)),
            Stage::Train => self.each_cell(|p, c| self.train(p, c)),
            Stage::Evaluate => self.evaluate(),
            Stage::Compare => self.compare(),
            Stage::Explain => self.each_project(|p| self.explain(p)),
        }
    }

    fn each_project(&self, f: impl Fn(&ProjectConfig) -> Result<(), PipelineError>) -> Result<(), PipelineError> {
        for p in &self.config.projects {
            f(p)?;
        }
        Ok(())
    }

    fn each_cell(
        &self,
        f: impl Fn(&ProjectConfig, FeatureCombo) -> Result<(), PipelineError> + Sync,
    ) -> Result<(), PipelineError> {
        let cells: Vec<(&ProjectConfig, FeatureCombo)> =
            self.config.projects.iter().flat_map(|p| self.combos.iter().map(move |&c| (p, c))).collect();
        let results: Vec<_> = cells.par_iter().map(|&(p, c)| f(p, c)).collect();
        first_error(results).map(|_| ())
    }

    fn ingest(&self, project: &ProjectConfig) -> Result<(), PipelineError> {
        let corpus = |source: CorpusError| PipelineError::Corpus { project: project.name.clone(), source };
        let mut ds = load_labels(&project.labels, &project.label_schema()).map_err(corpus)?;
        if !project.repos.is_empty() {
            for r in ds.records.iter_mut().filter(|r| r.timestamp.is_none()) {
                let repo = locate_commit(&r.commit_id, &project.repos).map_err(corpus)?;
                r.timestamp = Some(committer_timestamp(&repo, &r.commit_id).map_err(corpus)?);
            }
        }
        let patches = match &project.patches {
            Some(dir) => ds
                .records
                .iter()
                .map(|r| read_patch_file(dir, &r.commit_id).map_err(corpus))
                .collect::<Result<Vec<_>, _>>()?,
            None => {
                let ids: Vec<String> = ds.records.iter().map(|r| r.commit_id.clone()).collect();
                fetch_patches(&ids, &project.repos).map_err(corpus)?
            }
        };
        for (r, patch) in ds.records.iter_mut().zip(patches) {
            r.patch_text = patch;
        }
        let dir = self.project_dir(project);
        let gs_path = dir.join("gs.json");
        if let Some(gs) = &project.gs {
            let featurize = |source| PipelineError::Featurize { context: project.name.clone(), source };
            let rows = load_gs(gs, &self.config.gs_schema(project), &ds).map_err(featurize)?;
            attach_gs(&mut ds, &rows).map_err(featurize)?;
            mkdir(&dir)?;
            write_json(&gs_path, &rows)?;
        } else if gs_path.exists() {
            std::fs::remove_file(&gs_path).map_err(|e| io_error(&gs_path, e))?;
        }
        let patch_dir = dir.join("patches");
        mkdir(&patch_dir)?;
        for r in &ds.records {
            let p = patch_dir.join(format!("{}.diff", r.commit_id));
            std::fs::write(&p, &r.patch_text).map_err(|e| io_error(&p, e))?;
        }
        let path = dir.join("dataset.jsonl");
        let file = std::fs::File::create(&path).map_err(|e| io_error(&path, e))?;
        let mut w = BufWriter::new(file);
        write_dataset_jsonl(&ds, &mut w, |r| Some(format!("patches/{}.diff", r.commit_id)))
            .and_then(|_| w.flush())
            .map_err(|e| io_error(&path, e))
    }

    fn load_dataset(&self, project: &ProjectConfig) -> Result<Dataset, PipelineError> {
        let dir = self.project_dir(project);
        let path = dir.join("dataset.jsonl");
        require(&path, "ingest")?;
        let file = std::fs::File::open(&path).map_err(|e| io_error(&path, e))?;
        let lines = read_dataset_jsonl(BufReader::new(file))
            .map_err(|source| PipelineError::Corpus { project: project.name.clone(), source })?;
        let gs_path = dir.join("gs.json");
        let gs: Option<BTreeMap<String, GsFeatureRow>> =
            if gs_path.exists() { Some(read_json(&gs_path, "ingest")?) } else { None };
        let mut records = Vec::with_capacity(lines.len());
        for line in lines {
            let patch_text = match &line.patch {
                Some(rel) => {
                    let p = dir.join(rel);
                    std::fs::read_to_string(&p).map_err(|e| io_error(&p, e))?
                }
                None => String::new(),
            };
            let gs_row = gs.as_ref().and_then(|g| g.get(&line.commit_id).cloned());
            records.push(CommitRecord {
                commit_id: line.commit_id,
                project: line.project,
                timestamp: line.timestamp,
                label: line.label,
                patch_text,
                gs_row,
            });
        }
        let source_kind = match project.label_kind {
            LabelKind::Binary => SourceKind::Manual,
            LabelKind::BugCount => SourceKind::Automatic,
        };
        Ok(Dataset { project: project.name.clone(), source_kind, records })
    }

    fn extract(&self, project: &ProjectConfig) -> Result<(), PipelineError> {
        let ds = self.load_dataset(project)?;
        let feats = featurize_dataset(&ds, &self.config.extract_options())
            .map_err(|source| PipelineError::Featurize { context: project.name.clone(), source })?;
        let path = self.project_dir(project).join("features.jsonl");
        let file = std::fs::File::create(&path).map_err(|e| io_error(&path, e))?;
        let mut w = BufWriter::new(file);
        for f in &feats {
            serde_json::to_writer(&mut w, f).map_err(|e| io_error(&path, e))?;
            w.write_all(b"\n").map_err(|e| io_error(&path, e))?;
        }
        w.flush().map_err(|e| io_error(&path, e))
    }

    fn load_features(&self, project: &ProjectConfig) -> Result<Vec<CommitFeatures>, PipelineError> {
        let path = self.project_dir(project).join("features.jsonl");
        require(&path, "extract")?;
        let file = std::fs::File::open(&path).map_err(|e| io_error(&path, e))?;
        let mut out = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| io_error(&path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line).map_err(|e| io_error(&path, format!("line {}: {e}", i + 1)))?);
        }
        Ok(out)
    }

    fn encode(&self, project: &ProjectConfig, combo: FeatureCombo) -> Result<(), PipelineError> {
        let context = format!("{}/{}", project.name, combo.name());
        let featurize = |source| PipelineError::Featurize { context: context.clone(), source };
        let ds = self.load_dataset(project)?;
        let feats = self.load_features(project)?;
        let by_id: HashMap<&str, &CommitFeatures> = feats.iter().map(|f| (f.commit_id.as_str(), f)).collect();
        let (train, test) = split_time_ordered(&ds, self.config.train_fraction)
            .map_err(|source| PipelineError::Corpus { project: project.name.clone(), source })?;
        let pick = |d: &Dataset| -> Result<Vec<CommitFeatures>, PipelineError> {
            d.records
                .iter()
                .map(|r| {
                    by_id.get(r.commit_id.as_str()).map(|f| (*f).clone()).ok_or_else(|| PipelineError::Io {
                        path: self.project_dir(project).join("features.jsonl"),
                        detail: format!("no features for commit {}", r.commit_id),
                    })
                })
                .collect()
        };
        let train_feats = pick(&train)?;
        let test_feats = pick(&test)?;
        let vocab = match self.config.vocab {
            VocabScope::Train => build_vocabulary(&train_feats, combo),
            VocabScope::Full => build_vocabulary(&feats, combo),
        }
        .map_err(featurize)?;
        let (train_m, train_diag) = assemble_matrix(&train, &train_feats, &vocab).map_err(featurize)?;
        let (test_m, test_diag) = assemble_matrix(&test, &test_feats, &vocab).map_err(featurize)?;
        let dir = self.combo_dir(project, combo);
        mkdir(&dir)?;
        let vocab_path = dir.join("vocabulary.csv");
        write_sidecar(&train_m, &vocab_path, &dir.join("train.csv")).map_err(featurize)?;
        write_sidecar(&test_m, &vocab_path, &dir.join("test.csv")).map_err(featurize)?;
        let summary = EncodeSummary {
            combo: combo.name(),
            columns: vocab.len(),
            train_rows: train_m.n_rows(),
            test_rows: test_m.n_rows(),
            train: train_diag,
            test: test_diag,
        };
        write_json(&dir.join("encode.json"), &summary)
    }

    fn load_matrix(
        &self,
        project: &ProjectConfig,
        combo: FeatureCombo,
        part: &str,
    ) -> Result<FeatureMatrix, PipelineError> {
        let dir = self.combo_dir(project, combo);
        let rows = dir.join(format!("{part}.csv"));
        require(&rows, "encode")?;
        read_sidecar(&dir.join("vocabulary.csv"), &rows).map_err(|source| PipelineError::Featurize {
            context: format!("{}/{}", project.name, combo.name()),
            source,
        })
    }

    fn rank(&self, project: &ProjectConfig, combo: FeatureCombo) -> Result<(), PipelineError> {
        if combo.unprioritized {
            return Ok(());
        }
        let context = format!("{}/{}", project.name, combo.name());
        let m = self.load_matrix(project, combo, "train")?;
        let design = Design::new(&m.rows, m.n_cols())
            .map_err(|source| PipelineError::Learn { context: context.clone(), source })?;
        let spec = self.config.classifier(ModelKind::Rf, self.seed(&[&project.name, &combo.name(), "rank"]))?;
        let sel = &self.config.selection;
        let ranked = rfe_rank(&design, &m.labels, &spec, sel.step, sel.schedule())
            .map_err(|source| PipelineError::Select { context: context.clone(), source })?;
        write_rank_csv(&ranked, &m.vocabulary, &self.combo_dir(project, combo).join("ranks.csv"))
            .map_err(|source| PipelineError::Select { context, source })
    }

    fn select(&self, project: &ProjectConfig, combo: FeatureCombo) -> Result<(), PipelineError> {
        let context = format!("{}/{}", project.name, combo.name());
        let train = self.load_matrix(project, combo, "train")?;
        let dir = self.combo_dir(project, combo);
        let columns: Vec<usize> = if combo.unprioritized {
            (0..train.n_cols()).collect()
        } else {
            let rank_path = dir.join("ranks.csv");
            require(&rank_path, "rank")?;
            let sel_err = |source| PipelineError::Select { context: context.clone(), source };
            let ranked = read_rank_csv(&rank_path, train.n_cols()).map_err(sel_err)?;
            let (fit_m, eval_m) = if self.config.selection.paper_faithful {
                (train.clone(), self.load_matrix(project, combo, "test")?)
            } else {
                let n = train.n_rows();
                let n_eval = ((n as f64) * self.config.selection.eval_fraction).ceil() as usize;
                let n_eval = n_eval.clamp(1, n.saturating_sub(1).max(1));
                let cut = n - n_eval;
                (train.select_rows(&(0..cut).collect::<Vec<_>>()), train.select_rows(&(cut..n).collect::<Vec<_>>()))
            };
            let learn = |source| PipelineError::Learn { context: context.clone(), source };
            let fit_d = Design::new(&fit_m.rows, fit_m.n_cols()).map_err(learn)?;
            let eval_d = Design::new(&eval_m.rows, eval_m.n_cols()).map_err(learn)?;
            let spec = self.config.classifier(ModelKind::Rf, self.seed(&[&project.name, &combo.name(), "select"]))?;
            let result = greedy_forward_select(
                &ranked,
                &fit_d,
                &fit_m.labels,
                &eval_d,
                &eval_m.labels,
                &spec,
                self.config.selection.criterion,
            )
            .map_err(sel_err)?;
            write_json(&dir.join("selection.json"), &result)?;
            result.sorted_columns()
        };
        let names = columns.iter().map(|&c| train.vocabulary.label(c)).collect();
        write_json(&dir.join("selected.json"), &SelectedColumns { columns, names })
    }

    fn selected(&self, project: &ProjectConfig, combo: FeatureCombo) -> Result<Vec<usize>, PipelineError> {
        let s: SelectedColumns = read_json(&self.combo_dir(project, combo).join("selected.json"), "select")?;
        Ok(s.columns)
    }

    fn train(&self, project: &ProjectConfig, combo: FeatureCombo) -> Result<(), PipelineError> {
        let context = format!("{}/{}", project.name, combo.name());
        let cols = self.selected(project, combo)?;
        let train = self.load_matrix(project, combo, "train")?.select_columns(&cols);
        let dir = self.combo_dir(project, combo).join("models");
        mkdir(&dir)?;
        for &kind in &self.models {
            let spec = self.config.classifier(kind, self.seed(&[&project.name, &combo.name(), kind.as_str()]))?;
            let learn = |source| PipelineError::Learn { context: format!("{context}/{kind}"), source };
            let model = fit_matrix(&spec, &train).map_err(learn)?;
            model.save(&dir.join(format!("{kind}.json"))).map_err(learn)?;
        }
        Ok(())
    }

    fn load_model(
        &self,
        project: &ProjectConfig,
        combo: FeatureCombo,
        kind: ModelKind,
    ) -> Result<TrainedModel, PipelineError> {
        let path = self.combo_dir(project, combo).join("models").join(format!("{kind}.json"));
        require(&path, "train")?;
        TrainedModel::load(&path).map_err(|source| PipelineError::Learn {
            context: format!("{}/{}/{kind}", project.name, combo.name()),
            source,
        })
    }

    fn evaluate_cell(&self, project: &ProjectConfig, combo: FeatureCombo) -> Result<Vec<EvalRow>, PipelineError> {
        let context = format!("{}/{}", project.name, combo.name());
        let cols = self.selected(project, combo)?;
        let test = self.load_matrix(project, combo, "test")?.select_columns(&cols);
        let mut rows = Vec::new();
        let dir = self.combo_dir(project, combo);
        for &kind in &self.models {
            let model = self.load_model(project, combo, kind)?;
            let proba = model
                .predict_proba_matrix(&test)
                .map_err(|source| PipelineError::Learn { context: format!("{context}/{kind}"), source })?;
            let preds: Vec<u8> = proba.iter().map(|&p| threshold(p)).collect();
            let m = metrics(&test.labels, &preds, Some(&proba))
                .map_err(|source| PipelineError::Eval { context: format!("{context}/{kind}"), source })?;
            rows.push(EvalRow::new(&project.name, &combo.name(), kind.as_str(), cols.len(), &m));
            let path = dir.join(format!("predictions_{kind}.csv"));
            let mut w = csv::Writer::from_path(&path).map_err(|e| io_error(&path, e))?;
            w.write_record(["commit_id", "label", "probability", "prediction"]).map_err(|e| io_error(&path, e))?;
            for i in 0..test.n_rows() {
                w.write_record([
                    test.commit_ids[i].as_str(),
                    &test.labels[i].to_string(),
                    &format!("{:.6}", proba[i]),
                    &preds[i].to_string(),
                ])
                .map_err(|e| io_error(&path, e))?;
            }
            w.flush().map_err(|e| io_error(&path, e))?;
        }
        Ok(rows)
    }

    fn evaluate(&self) -> Result<(), PipelineError> {
        let cells: Vec<(&ProjectConfig, FeatureCombo)> =
            self.config.projects.iter().flat_map(|p| self.combos.iter().map(move |&c| (p, c))).collect();
        let results: Vec<_> = cells.par_iter().map(|&(p, c)| self.evaluate_cell(p, c)).collect();
        let rows: Vec<EvalRow> = first_error(results)?.into_iter().flatten().collect();
        let path = self.config.out.join("results.csv");
        write_results_csv(&rows, &path).map_err(|source| PipelineError::Eval { context: "results".into(), source })
    }

    fn compare(&self) -> Result<(), PipelineError> {
        let path = self.config.out.join("results.csv");
        require(&path, "evaluate")?;
        let eval = |source| PipelineError::Eval { context: "compare".into(), source };
        let rows = read_results_csv(&path).map_err(eval)?;
        let report = compare_combos(&rows, &self.config.baseline).map_err(eval)?;
        write_reports(&self.config.out, &rows, &report).map_err(eval)
    }

    fn explain(&self, project: &ProjectConfig) -> Result<(), PipelineError> {
        let cfg = &self.config.explain;
        if !cfg.enabled {
            return Ok(());
        }
        let combo: FeatureCombo =
            cfg.combo.parse().map_err(|e: crate::featurize::FeaturizeError| PipelineError::Config(e.to_string()))?;
        let kind: ModelKind =
            cfg.model.parse().map_err(|e: crate::learn::LearnError| PipelineError::Config(e.to_string()))?;
        if !self.combos.contains(&combo) || !self.models.contains(&kind) {
            return Ok(());
        }
        let cols = self.selected(project, combo)?;
        let train = self.load_matrix(project, combo, "train")?.select_columns(&cols);
        let test = self.load_matrix(project, combo, "test")?.select_columns(&cols);
        let model = self.load_model(project, combo, kind)?;
        let report =
            explain_predicted_buggy(&model, &test, &train, &cfg.options(), self.seed(&[&project.name, "explain"]))
                .map_err(|source| PipelineError::Explain { context: project.name.clone(), source })?;
        let dir = self.project_dir(project);
        write_explain_json(&report, &dir.join("explain.json"))
            .map_err(|source| PipelineError::Explain { context: project.name.clone(), source })?;
        let explanations: Vec<_> = report.explanations.values().cloned().collect();
        let top = aggregate_conditions(&explanations, cfg.top_k);
        let md = conditions_markdown(&project.name, &top, explanations.len());
        let path = dir.join("conditions_top.md");
        std::fs::write(&path, md).map_err(|e| io_error(&path, e))
    }
}

fn read_patch_file(dir: &Path, commit_id: &str) -> Result<String, CorpusError> {
    for ext in ["diff", "patch"] {
        let p = dir.join(format!("{commit_id}.{ext}"));
        if p.is_file() {
            return std::fs::read_to_string(&p).map_err(|source| CorpusError::Io { path: p, source });
        }
    }
    Err(CorpusError::CommitNotFound(commit_id.to_string()))
}
