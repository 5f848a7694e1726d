//! Synthetic labelled corpus with planted syntax patterns.
//!
//! Each commit is a Java patch of one-statement hunks drawn from a small set
//! of templates. Two templates are planted with a higher rate in buggy
//! commits than in clean ones; churn metrics are noise with a faint shift.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::featurize::DEFAULT_GS_METRICS;
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub commits: usize,
    pub buggy_rate: f64,
    /// Chance that each planted template appears in a buggy commit.
    pub planted_buggy: f64,
    /// Chance that each planted template appears in a clean commit.
    pub planted_clean: f64,
    /// Shift added to `la` for buggy commits.
    pub gs_shift: f64,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self { commits: 300, buggy_rate: 0.5, planted_buggy: 0.8, planted_clean: 0.2, gs_shift: 5.0, seed: 42 }
    }
}

const VARS: [&str; 6] = ["count", "total", "size", "idx", "value", "offset"];
const OBJS: [&str; 4] = ["buffer", "reader", "session", "cache"];
const METHODS: [&str; 4] = ["next", "get", "flush", "size"];

type Template = fn(&mut ChaCha8Rng) -> String;

fn v(r: &mut ChaCha8Rng) -> &'static str {
    VARS.choose(r).unwrap()
}

fn o(r: &mut ChaCha8Rng) -> &'static str {
    OBJS.choose(r).unwrap()
}

fn m(r: &mut ChaCha8Rng) -> &'static str {
    METHODS.choose(r).unwrap()
}

fn n(r: &mut ChaCha8Rng) -> u32 {
    r.gen_range(0..64)
}

const COMMON: [Template; 10] = [
    |r| format!("int {} = {};", v(r), n(r)),
    |r| format!("{} = {} + {};", v(r), v(r), n(r)),
    |r| format!("{}.{}({});", o(r), m(r), v(r)),
    |r| format!("return {};", v(r)),
    |r| format!("if ({} > {}) {} = {};", v(r), n(r), v(r), n(r)),
    |r| format!("for (int i = 0; i < {}; i++) {} += i;", n(r), v(r)),
    |r| format!("String {} = {}.{}();", v(r), o(r), m(r)),
    |r| format!("{} = {} * {} - {};", v(r), v(r), v(r), n(r)),
    |r| format!("long {} = {}.{}({}, {});", v(r), o(r), m(r), v(r), n(r)),
    |r| format!("if ({} == {}) return {};", v(r), v(r), n(r)),
];

const PLANTED: [Template; 2] = [
    |r| format!("{} = table[{}.{}({})];", v(r), o(r), m(r), n(r)),
    |r| format!("while ({}.{}()) {}--;", o(r), m(r), v(r)),
];

pub struct SynthCommit {
    pub commit_id: String,
    pub label: u8,
    pub timestamp: i64,
    pub patch: String,
    pub gs: Vec<f64>,
}

fn patch_text(statements: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "diff --git a/src/main/java/demo/Worker.java b/src/main/java/demo/Worker.java");
    let _ = writeln!(s, "--- a/src/main/java/demo/Worker.java");
    let _ = writeln!(s, "+++ b/src/main/java/demo/Worker.java");
    for (i, stmt) in statements.iter().enumerate() {
        let line = 10 + i * 20;
        let _ = writeln!(s, "@@ -{line},2 +{line},3 @@");
        let _ = writeln!(s, "     void step{i}() {{");
        let _ = writeln!(s, "+        {stmt}");
        let _ = writeln!(s, "     }}");
    }
    s
}

pub fn generate(opts: &SynthOptions) -> Vec<SynthCommit> {
    let mut rng = seed::rng(opts.seed, &["synth"]);
    (0..opts.commits)
        .map(|i| {
            let label = u8::from(rng.gen_bool(opts.buggy_rate));
            let mut stmts: Vec<String> =
                (0..rng.gen_range(2..=4)).map(|_| COMMON.choose(&mut rng).unwrap()(&mut rng)).collect();
            let rate = if label == 1 { opts.planted_buggy } else { opts.planted_clean };
            for t in PLANTED {
                if rng.gen_bool(rate) {
                    stmts.push(t(&mut rng));
                }
            }
            stmts.shuffle(&mut rng);
            let gs = DEFAULT_GS_METRICS
                .iter()
                .map(|&metric| {
                    let base: f64 = rng.gen_range(0.0..40.0);
                    let shift = if metric == "la" && label == 1 { opts.gs_shift } else { 0.0 };
                    (base + shift).round()
                })
                .collect();
            let id = seed::derive(opts.seed, &["commit", &i.to_string()]);
            SynthCommit {
                commit_id: format!("{id:016x}{:08x}", i as u32),
                label,
                timestamp: 1_500_000_000 + (i as i64) * 86_400,
                patch: patch_text(&stmts),
                gs,
            }
        })
        .collect()
}

/// Writes labels, churn metrics, patches and a `config.toml` into `dir` and
/// returns the config path.
pub fn write_corpus(dir: &Path, opts: &SynthOptions) -> io::Result<PathBuf> {
    let commits = generate(opts);
    let patches = dir.join("patches");
    std::fs::create_dir_all(&patches)?;
    let mut labels = String::from("commit_id,label,committed_at\n");
    let mut gs = format!("commit_id,{}\n", DEFAULT_GS_METRICS.join(","));
    for c in &commits {
        let _ = writeln!(labels, "{},{},{}", c.commit_id, c.label, c.timestamp);
        let values: Vec<String> = c.gs.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(gs, "{},{}", c.commit_id, values.join(","));
        std::fs::write(patches.join(format!("{}.diff", c.commit_id)), &c.patch)?;
    }
    std::fs::write(dir.join("labels.csv"), labels)?;
    std::fs::write(dir.join("gs.csv"), gs)?;
    let config = format!(
        "seed = {}\nout = \"out\"\n\n[[projects]]\nname = \"synthetic\"\nlabels = \"labels.csv\"\ntimestamp_column = \"committed_at\"\ngs = \"gs.csv\"\npatches = \"patches\"\n",
        opts.seed
    );
    let path = dir.join("config.toml");
    std::fs::write(&path, config)?;
    Ok(path)
}
