//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when a gating criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use bicpat::corpus::{CommitRecord, Dataset, SourceKind};
use bicpat::evaluate::{auc, metrics, read_results_csv, wilcoxon_signed_rank};
use bicpat::explain::{aggregate_conditions, explain_instance, ExplainOptions, RuleCondition};
use bicpat::featurize::{
    assemble_matrix, build_vocabulary, extract_ngrams, extract_tp, read_sidecar, write_sidecar, CommitFeatures,
    FeatureCombo, FeatureMatrix, FeatureVocabulary, Namespace, SparseRow,
};
use bicpat::learn::{
    dense_to_sparse, ClassifierSpec, Design, ModelKind, ModelState, RandomForest, TrainedModel, Tree, TreeNode,
};
use bicpat::pipeline::{Pipeline, RunConfig};
use bicpat::select::{greedy_forward_select, rfe_rank, Criterion, RankedFeatureList};
use bicpat::syntax::parse_source;
use bicpat::synth::{write_corpus, SynthOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Result<String, String>) -> Outcome {
    let start = Instant::now();
    let result = f();
    let elapsed = start.elapsed();
    match result {
        Ok(detail) => match limit {
            Some(l) if elapsed > l => Outcome::Fail(format!("{detail}; took {elapsed:.2?}, limit {l:.0?}")),
            _ => Outcome::Pass(format!("{detail}; {elapsed:.2?}")),
        },
        Err(detail) => Outcome::Fail(format!("{detail}; {elapsed:.2?}")),
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn golden_encoding() -> Result<String, String> {
    let rows: [(&str, &[&str], u8); 5] = [
        ("c001", &["TP1", "TP2", "TP3", "TP3", "TP4", "TP4"], 0),
        ("c002", &["TP2", "TP4", "TP5"], 1),
        ("c003", &["TP1", "TP3", "TP6"], 0),
        ("c004", &["TP4", "TP4", "TP4"], 0),
        ("c005", &["TP4", "TP6", "TP7", "TP7"], 1),
    ];
    let expect: [[f64; 7]; 5] = [
        [1., 1., 2., 2., 0., 0., 0.],
        [0., 1., 0., 1., 1., 0., 0.],
        [1., 0., 1., 0., 0., 1., 0.],
        [0., 0., 0., 3., 0., 0., 0.],
        [0., 0., 0., 1., 0., 1., 2.],
    ];
    let records = rows
        .iter()
        .enumerate()
        .map(|(i, (id, _, l))| CommitRecord {
            commit_id: id.to_string(),
            project: "fixture".into(),
            timestamp: Some(i as i64 + 1),
            label: *l,
            patch_text: String::new(),
            gs_row: None,
        })
        .collect();
    let ds = Dataset { project: "fixture".into(), source_kind: SourceKind::Manual, records };
    let feats: Vec<CommitFeatures> = rows
        .iter()
        .map(|(id, tp, _)| CommitFeatures {
            commit_id: id.to_string(),
            tp: tp.iter().copied().collect(),
            leaf_count: tp.len() as u64,
            ..Default::default()
        })
        .collect();
    let vocab = build_vocabulary(&feats, FeatureCombo::TP).map_err(|e| e.to_string())?;
    let (m, _) = assemble_matrix(&ds, &feats, &vocab).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_sidecar(&m, &dir.path().join("v.csv"), &dir.path().join("r.csv")).map_err(|e| e.to_string())?;
    let back = read_sidecar(&dir.path().join("v.csv"), &dir.path().join("r.csv")).map_err(|e| e.to_string())?;
    let names: Vec<String> = (0..back.n_cols()).map(|c| back.vocabulary.entry(c).1.to_string()).collect();
    check(names == ["TP1", "TP2", "TP3", "TP4", "TP5", "TP6", "TP7"], || format!("columns {names:?}"))?;
    let mut matched = 0;
    for (r, want) in expect.iter().enumerate() {
        for (c, &v) in want.iter().enumerate() {
            matched += usize::from(back.get(r, c) == v);
        }
    }
    check(matched == 35, || format!("{matched}/35 cells match"))?;
    check(back.labels == [0, 1, 0, 0, 1], || "labels differ".into())?;
    Ok("35/35 cells".into())
}

fn vocabulary_arithmetic() -> Result<String, String> {
    let mut f = CommitFeatures { commit_id: "a1".into(), ..Default::default() };
    f.gs = Some((0..12).map(|i| (format!("m{i:02}"), 1.0)).collect());
    f.ts = (0..10_514).map(|i| format!("g{i}")).collect();
    f.tp = (0..741).map(|i| format!("p{i}")).collect();
    let all = build_vocabulary([&f], FeatureCombo::GS_TS_TP).map_err(|e| e.to_string())?.len();
    let gs_ts = build_vocabulary([&f], FeatureCombo::GS_TS).map_err(|e| e.to_string())?.len();
    check(all == 11_267 && gs_ts == 10_526, || format!("GS+TS+TP={all}, GS+TS={gs_ts}"))?;
    Ok(format!("GS+TS+TP={all}, GS+TS={gs_ts}"))
}

fn wilcoxon_oracle() -> Result<String, String> {
    let diffs = [0.05, 0.02, 0.07, 0.18, 0.08, 0.14];
    let got = wilcoxon_signed_rank(&diffs).map_err(|e| e.to_string())?.p_value;
    // Independent enumeration: ranks of |d| are 1..6 with no ties.
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut rank = [0.0; 6];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = (r + 1) as f64;
    }
    let mean = 21.0 / 2.0;
    let observed: f64 = (0..6).filter(|&i| diffs[i] > 0.0).map(|i| rank[i]).sum();
    let extreme = (0u32..64)
        .filter(|mask| {
            let w: f64 = (0..6).filter(|i| mask & (1 << i) != 0).map(|i| rank[i]).sum();
            (w - mean).abs() >= (observed - mean).abs() - 1e-12
        })
        .count();
    let brute = extreme as f64 / 64.0;
    check((got - 0.03125).abs() <= 1e-15, || format!("p = {got}"))?;
    check((got - brute).abs() <= 1e-15, || format!("p = {got}, enumeration {brute}"))?;
    check(got < 0.05, || format!("p = {got}"))?;
    Ok(format!("p = {got}, enumeration = {brute}"))
}

fn metric_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut auc_cases = 0;
    for case in 0..1000 {
        let n = rng.gen_range(1..80);
        let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.4))).collect();
        let preds: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.5))).collect();
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..20u8)) / 20.0).collect();
        let m = metrics(&labels, &preds, Some(&scores)).map_err(|e| e.to_string())?;
        let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
        for (&l, &p) in labels.iter().zip(&preds) {
            match (l, p) {
                (1, 1) => tp += 1.0,
                (0, 1) => fp += 1.0,
                (1, 0) => fn_ += 1.0,
                _ => {}
            }
        }
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        let f1 = if tp > 0.0 { 2.0 * tp / (2.0 * tp + fp + fn_) } else { 0.0 };
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
        check(close(m.precision, precision) && close(m.recall, recall) && close(m.f1, f1), || {
            format!("case {case}: got P={} R={} F1={}, oracle {precision} {recall} {f1}", m.precision, m.recall, m.f1)
        })?;
        let (mut wins, mut pairs) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
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
        if pairs > 0.0 {
            auc_cases += 1;
            let want = wins / pairs;
            let a = auc(&labels, &scores).map_err(|e| e.to_string())?;
            check(close(a, want) && m.auc.is_some_and(|x| close(x, want)), || {
                format!("case {case}: AUC {a} vs {want}")
            })?;
        } else {
            check(m.auc.is_none(), || format!("case {case}: AUC defined for a single class"))?;
        }
    }
    Ok(format!("1000 vectors, {auc_cases} with both classes"))
}

fn pattern_structure() -> Result<String, String> {
    let tree = parse_source("if (x <= y) { y = 0; } else { y = 1; }");
    let tp = extract_tp(&tree);
    check(tp.get("if_stmt-if-condition-expr-name") > 0, || {
        format!("paths {:?}", tp.counts.keys().collect::<Vec<_>>())
    })?;
    check(tp.total() == tree.leaf_count() as u64, || format!("|TP| = {}, leaves = {}", tp.total(), tree.leaf_count()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let alphabet = ["name", "operator", "literal", "call", "block-open", "block-close"];
    for i in 0..100 {
        let len = rng.gen_range(0..40usize);
        let seq: Vec<&str> = (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect();
        let total = extract_ngrams(&seq, 1..=5).total();
        let want: u64 = (1..=len.min(5)).map(|n| (len - n + 1) as u64).sum();
        check(total == want, || format!("sequence {i} of length {len}: {total} grams, expected {want}"))?;
    }
    Ok(format!("|TP| = {} leaves; 100 n-gram totals", tree.leaf_count()))
}

fn selection_properties() -> Result<String, String> {
    let mut hits = 0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let x: Vec<Vec<f64>> = (0..200).map(|_| (0..3).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let y: Vec<u8> = x.iter().map(|r| u8::from(r[0] > 0.5)).collect();
        let d = Design::from_dense(&x).map_err(|e| e.to_string())?;
        let r = rfe_rank(&d, &y, &ClassifierSpec::new(ModelKind::Rf, seed), 1, None).map_err(|e| e.to_string())?;
        check(r.is_permutation(), || format!("seed {seed}: ranks {:?}", r.ranks))?;
        hits += usize::from(r.ranks[0] == 1);
    }
    check(hits >= 9, || format!("informative feature first in {hits}/10 seeds"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let x: Vec<Vec<f64>> = (0..240)
        .map(|_| {
            let a: f64 = rng.gen_range(0.0..1.0);
            let b: f64 = rng.gen_range(0.0..1.0);
            vec![a, b, a, rng.gen_range(0.0..1.0), b, rng.gen_range(0.0..1.0)]
        })
        .collect();
    let y: Vec<u8> = x.iter().map(|r| u8::from(r[0] + 0.5 * r[1] > 0.75)).collect();
    let tr = Design::from_dense(&x[..170]).map_err(|e| e.to_string())?;
    let ev = Design::from_dense(&x[170..]).map_err(|e| e.to_string())?;
    let ranked = RankedFeatureList { ranks: vec![1, 2, 3, 5, 4, 6] };
    let spec = ClassifierSpec::new(ModelKind::Rf, 3);
    let sel = greedy_forward_select(&ranked, &tr, &y[..170], &ev, &y[170..], &spec, Criterion::F1)
        .map_err(|e| e.to_string())?;
    let accepted: Vec<f64> = sel.trace.iter().filter(|t| t.accepted).filter_map(|t| t.score).collect();
    check(accepted.windows(2).all(|w| w[1] >= w[0]), || format!("accepted scores {accepted:?}"))?;
    check(!sel.selected.contains(&2), || "duplicate of column 0 accepted".into())?;
    check(!(sel.selected.contains(&1) && sel.selected.contains(&4)), || "duplicate of column 1 accepted".into())?;
    Ok(format!("informative first in {hits}/10 seeds; {} accepted steps non-decreasing", accepted.len()))
}

fn synthetic_run(
    dir: &Path,
    seed: u64,
    commits: usize,
    edit: impl FnOnce(&mut RunConfig),
) -> Result<Vec<bicpat::evaluate::EvalRow>, String> {
    let opts = SynthOptions { commits, seed, ..Default::default() };
    let cfg_path = write_corpus(dir, &opts).map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::load(&cfg_path).map_err(|e| e.to_string())?;
    edit(&mut cfg);
    let out = cfg.out.clone();
    Pipeline::new(cfg).and_then(|p| p.run()).map_err(|e| e.to_string())?;
    read_results_csv(&out.join("results.csv")).map_err(|e| e.to_string())
}

fn directional_claim() -> Result<String, String> {
    let mut wins = 0;
    let mut cells = Vec::new();
    for seed in 1..=10u64 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let rows = synthetic_run(dir.path(), seed, 300, |c| {
            c.combos = ["GS-ALL", "GS", "TS", "GS+TP"].map(String::from).to_vec();
            c.models = vec!["rf".into()];
            c.selection.coarse = true;
            c.explain.enabled = false;
        })?;
        let f1: BTreeMap<&str, f64> = rows.iter().map(|r| (r.combo.as_str(), r.f1)).collect();
        let ok = f1["GS+TP"] > f1["GS"] && f1["TS"] > f1["GS-ALL"];
        wins += usize::from(ok);
        cells.push(format!("s{seed}:{:.2}/{:.2},{:.2}/{:.2}", f1["GS+TP"], f1["GS"], f1["TS"], f1["GS-ALL"]));
    }
    let detail = format!("{wins}/10 seeds with F1(GS+TP)>F1(GS) and F1(TS)>F1(GS-ALL) [{}]", cells.join(" "));
    check(wins >= 8, || detail.clone())?;
    Ok(detail)
}

fn replication() -> Outcome {
    let (Ok(config), Ok(expected)) =
        (std::env::var("BIC_REPLICATION_CONFIG"), std::env::var("BIC_REPLICATION_EXPECTED"))
    else {
        return Outcome::Skip("set BIC_REPLICATION_CONFIG and BIC_REPLICATION_EXPECTED to run".into());
    };
    let run = || -> Result<String, String> {
        let mut cfg = RunConfig::load(Path::new(&config)).map_err(|e| e.to_string())?;
        cfg.models = vec!["rf".into()];
        let out = cfg.out.clone();
        Pipeline::new(cfg).and_then(|p| p.run()).map_err(|e| e.to_string())?;
        let rows = read_results_csv(&out.join("results.csv")).map_err(|e| e.to_string())?;
        let mut r = csv::Reader::from_path(&expected).map_err(|e| e.to_string())?;
        let (mut within, mut total, mut report) = (0, 0, Vec::new());
        for rec in r.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            let (p, c) = (rec.get(0).unwrap_or(""), rec.get(1).unwrap_or(""));
            let want: f64 = rec.get(2).and_then(|s| s.parse().ok()).ok_or("bad expected F1")?;
            total += 1;
            match rows.iter().find(|x| x.project == p && x.combo == c && x.model == "rf") {
                Some(x) if (x.f1 - want).abs() <= 0.15 => within += 1,
                Some(x) => report.push(format!("{p}/{c}: {:.2} vs {want:.2}", x.f1)),
                None => report.push(format!("{p}/{c}: missing")),
            }
        }
        let detail = format!("{within}/{total} cells within 0.15; deviations: {}", report.join(", "));
        check(total > 0 && within * 3 >= total * 2, || detail.clone())?;
        Ok(detail)
    };
    timed(None, run)
}

fn threshold_model() -> TrainedModel {
    let tree = Tree {
        nodes: vec![
            TreeNode::Split { feature: 0, threshold: 10.0, left: 1, right: 2 },
            TreeNode::Leaf { value: 0.0, weight: 1.0 },
            TreeNode::Leaf { value: 1.0, weight: 1.0 },
        ],
    };
    TrainedModel {
        format_version: bicpat::learn::MODEL_FORMAT_VERSION,
        spec: ClassifierSpec::new(ModelKind::Rf, 0),
        n_features: 2,
        state: ModelState::Rf(RandomForest { trees: vec![tree] }),
        importances: Some(vec![1.0, 0.0]),
    }
}

fn explanation_contract() -> Result<String, String> {
    let model = threshold_model();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rows: Vec<Vec<f64>> = (0..120).map(|_| vec![rng.gen_range(0.0..20.0), rng.gen_range(0.0..5.0)]).collect();
    let training = FeatureMatrix {
        vocabulary: FeatureVocabulary::from_entries([
            (Namespace::Gs, "f".to_string()),
            (Namespace::Gs, "g".to_string()),
        ]),
        commit_ids: (0..rows.len()).map(|i| format!("{i:08x}")).collect(),
        rows: rows.iter().map(|r| dense_to_sparse(r)).collect(),
        labels: rows.iter().map(|r| u8::from(r[0] > 10.0)).collect(),
        timestamps: vec![None; rows.len()],
    };
    let opts = ExplainOptions::default();
    let mut explanations = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..30 {
        let inst = vec![rng.gen_range(0.0..20.0), rng.gen_range(0.0..5.0)];
        let row: SparseRow = dense_to_sparse(&inst);
        let e = explain_instance(&model, &format!("{i:04x}"), &row, &training, &opts, 11).map_err(|e| e.to_string())?;
        for r in &e.rules {
            let col = training.vocabulary.index_of(r.namespace, &r.name).ok_or("unknown rule feature")?;
            check(r.holds(inst[col]), || format!("rule {r} does not bracket {}", inst[col]))?;
        }
        check(e.fidelity <= 1.0, || format!("fidelity {}", e.fidelity))?;
        let f_rules: Vec<&RuleCondition> = e.rules.iter().filter(|r| r.name == "f").collect();
        check(f_rules.len() == 1, || format!("instance {inst:?}: rules {:?}", e.rules))?;
        let bound = if inst[0] > 10.0 { f_rules[0].lower } else { f_rules[0].upper };
        worst = worst.max((bound - 10.0).abs() / 10.0);
        explanations.push(e);
    }
    check(worst <= 0.05, || format!("recovered bound off by {:.1}%", worst * 100.0))?;

    let agg = aggregate_conditions(&explanations, 5);
    for a in &agg {
        let brute = explanations
            .iter()
            .flat_map(|e| &e.rules)
            .filter(|r| {
                r.namespace == a.namespace
                    && r.name == a.name
                    && r.lower.is_finite() == a.lower.is_finite()
                    && r.upper.is_finite() == a.upper.is_finite()
            })
            .count();
        check(brute == a.frequency, || format!("{}: frequency {} vs recount {brute}", a.name, a.frequency))?;
    }
    Ok(format!("30 instances, worst bound error {:.2}%", worst * 100.0))
}

fn determinism() -> Result<String, String> {
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        synthetic_run(dir.path(), 42, 150, |_| {})?;
        outputs.push(std::fs::read(dir.path().join("out/results.csv")).map_err(|e| e.to_string())?);
    }
    check(outputs[0] == outputs[1], || "results.csv differs between runs".into())?;
    Ok(format!("{} identical bytes", outputs[0].len()))
}

/// Id, name, whether it gates the exit status, and the check.
type Check = (u32, &'static str, bool, Box<dyn FnOnce() -> Outcome>);

fn main() {
    let second = Duration::from_secs(1);
    let criteria: Vec<Check> = vec![
        (1, "golden encoding", true, Box::new(move || timed(Some(second), golden_encoding))),
        (2, "vocabulary arithmetic", true, Box::new(move || timed(Some(second), vocabulary_arithmetic))),
        (3, "exact signed-rank p-value", true, Box::new(|| timed(None, wilcoxon_oracle))),
        (4, "metric oracle", true, Box::new(|| timed(None, metric_oracle))),
        (5, "pattern extraction structure", true, Box::new(|| timed(None, pattern_structure))),
        (6, "selection properties", true, Box::new(|| timed(None, selection_properties))),
        (
            7,
            "directional claim on synthetic corpus",
            true,
            Box::new(|| timed(Some(Duration::from_secs(120)), directional_claim)),
        ),
        (8, "replication on published data", false, Box::new(replication)),
        (9, "explanation contract", true, Box::new(|| timed(None, explanation_contract))),
        (10, "determinism", true, Box::new(|| timed(None, determinism))),
    ];
    let mut failed = 0;
    for (id, name, gating, run) in criteria {
        match run() {
            Outcome::Pass(d) => println!("PASS {id:>2} {name}: {d}"),
            Outcome::Fail(d) => {
                println!("FAIL {id:>2} {name}: {d}");
                failed += usize::from(gating);
            }
            Outcome::Skip(d) => println!("SKIP {id:>2} {name}: {d}"),
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
