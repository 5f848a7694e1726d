use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bicpat::evaluate::{metrics, EvalError, Metrics};
use bicpat::pipeline::{Pipeline, PipelineError, RunConfig, Stage, VocabScope};
use bicpat::syntax::{extract_fragments, FragmentMode};
use bicpat::synth::{write_corpus, SynthOptions};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bicpat", version, about = "Bug-inducing commit prediction from syntax-pattern features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated combos, e.g. `GS,GS+TP,GS-ALL`.
    #[arg(long, value_delimiter = ',')]
    combos: Option<Vec<String>>,
    /// Comma-separated models: rf, knn, gbc, pct.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// added_only or added_plus_context.
    #[arg(long)]
    mode: Option<FragmentMode>,
    /// train or full.
    #[arg(long)]
    vocab: Option<VocabScope>,
    /// Score greedy selection on the test partition.
    #[arg(long)]
    paper_faithful: bool,
    /// Geometric elimination before one-at-a-time elimination.
    #[arg(long)]
    coarse: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Every stage from ingest to explain.
    Run(RunArgs),
    /// Load labels, patches and churn metrics.
    Ingest(RunArgs),
    /// Extract TP and TS features, or print the fragments of one patch.
    Extract {
        #[command(flatten)]
        run: RunArgs,
        /// Print the code fragments of this patch file as JSON.
        #[arg(long)]
        patch: Option<PathBuf>,
    },
    /// Split and encode feature matrices.
    Encode(RunArgs),
    /// Rank features by recursive elimination.
    Rank(RunArgs),
    /// Greedy forward selection over the ranking.
    Select(RunArgs),
    /// Fit every model on the selected features.
    Train(RunArgs),
    /// Score test predictions, or a predictions CSV.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        /// CSV with commit_id, label, prediction and optional probability.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Pairwise significance tests and improvement over a baseline.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        baseline: Option<String>,
    },
    /// Rule explanations for predicted-buggy test commits.
    Explain(RunArgs),
    /// Write a synthetic corpus with planted patterns.
    Synth {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 300)]
        commits: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Data(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e.exit_code() {
            1 => Failure::Validation(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

fn load_config(args: &RunArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(c) = &args.combos {
        cfg.combos = c.clone();
    }
    if let Some(m) = &args.models {
        cfg.models = m.clone();
    }
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if let Some(v) = args.vocab {
        cfg.vocab = v;
    }
    if args.paper_faithful {
        cfg.selection.paper_faithful = true;
    }
    if args.coarse {
        cfg.selection.coarse = true;
    }
    if let Some(o) = &args.out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

fn stage(args: &RunArgs, stage: Option<Stage>) -> Result<(), Failure> {
    let pipeline = Pipeline::new(load_config(args)?)?;
    match stage {
        Some(s) => pipeline.run_stage(s)?,
        None => pipeline.run()?,
    }
    eprintln!("wrote {}", pipeline.config().out.display());
    Ok(())
}

fn print_fragments(path: &Path, mode: FragmentMode) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("patch");
    let frags = extract_fragments(id, &text, mode).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    println!("{}", serde_json::to_string_pretty(&frags).expect("fragments serialize"));
    Ok(())
}

type Predictions = (Vec<u8>, Vec<u8>, Option<Vec<f64>>);

fn read_predictions(path: &Path) -> Result<Predictions, Failure> {
    let bad = |d: String| Failure::Data(format!("{}: {d}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let label = col("label").ok_or_else(|| bad("missing column `label`".into()))?;
    let pred = col("prediction").ok_or_else(|| bad("missing column `prediction`".into()))?;
    let proba = col("probability");
    let (mut labels, mut preds, mut probas) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let bit = |c: usize| match rec.get(c).map(str::trim) {
            Some("0") => Ok(0u8),
            Some("1") => Ok(1u8),
            other => Err(bad(format!("record {}: expected 0 or 1, got {other:?}", i + 1))),
        };
        labels.push(bit(label)?);
        preds.push(bit(pred)?);
        if let Some(p) = proba {
            let v: f64 = rec
                .get(p)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad(format!("record {}: bad probability", i + 1)))?;
            probas.push(v);
        }
    }
    Ok((labels, preds, proba.map(|_| probas)))
}

fn evaluate_file(path: &Path) -> Result<(), Failure> {
    let (labels, preds, proba) = read_predictions(path)?;
    let m: Metrics = metrics(&labels, &preds, proba.as_deref())
        .map_err(|e: EvalError| Failure::Data(format!("{}: {e}", path.display())))?;
    println!("{}", serde_json::to_string_pretty(&m).expect("metrics serialize"));
    Ok(())
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run(a) => stage(&a, None),
        Command::Ingest(a) => stage(&a, Some(Stage::Ingest)),
        Command::Extract { run, patch: Some(p) } => print_fragments(&p, run.mode.unwrap_or_default()),
        Command::Extract { run, patch: None } => stage(&run, Some(Stage::Extract)),
        Command::Encode(a) => stage(&a, Some(Stage::Encode)),
        Command::Rank(a) => stage(&a, Some(Stage::Rank)),
        Command::Select(a) => stage(&a, Some(Stage::Select)),
        Command::Train(a) => stage(&a, Some(Stage::Train)),
        Command::Evaluate { predictions: Some(p), .. } => evaluate_file(&p),
        Command::Evaluate { run, predictions: None } => stage(&run, Some(Stage::Evaluate)),
        Command::Compare { run, baseline } => {
            let mut cfg = load_config(&run)?;
            if let Some(b) = baseline {
                cfg.baseline = b;
            }
            let pipeline = Pipeline::new(cfg)?;
            pipeline.run_stage(Stage::Compare)?;
            Ok(())
        }
        Command::Explain(a) => stage(&a, Some(Stage::Explain)),
        Command::Synth { dir, commits, seed } => {
            let opts = SynthOptions { commits, seed, ..Default::default() };
            let path = write_corpus(&dir, &opts).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| dispatch(cli.command)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::Validation(m))) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Ok(Err(Failure::Data(m))) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(3),
    }
}
